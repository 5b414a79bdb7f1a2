//! Tab-separated text tables with a header row. Cells never contain tabs or
//! newlines; those characters are replaced by spaces on write.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TsvWriter {
    buf: String,
    width: usize,
}

impl TsvWriter {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = Self {
            buf: String::new(),
            width: header.len(),
        };
        w.push_cells(header.iter().map(|s| s.as_ref().to_string()));
        w
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let cells: Vec<String> = cells.into_iter().map(Into::into).collect();
        debug_assert_eq!(cells.len(), self.width, "row width mismatch");
        self.push_cells(cells.into_iter());
    }

    fn push_cells(&mut self, cells: impl Iterator<Item = String>) {
        for (i, cell) in cells.enumerate() {
            if i > 0 {
                self.buf.push('\t');
            }
            if cell.contains(['\t', '\n', '\r']) {
                self.buf.push_str(&cell.replace(['\t', '\n', '\r'], " "));
            } else {
                self.buf.push_str(&cell);
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }

    pub fn write_to(self, path: &Path) -> Result<()> {
        std::fs::write(path, self.buf)?;
        Ok(())
    }
}

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{x}");
    s
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Parsed table: header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
        let header: Vec<String> = match lines.next() {
            Some((_, l)) => l.split('\t').map(str::to_string).collect(),
            None => {
                return Err(Error::Table {
                    line: 1,
                    message: "missing header row".into(),
                })
            }
        };
        let mut rows = Vec::new();
        for (i, line) in lines {
            let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
            if cells.len() != header.len() {
                return Err(Error::Table {
                    line: i + 1,
                    message: format!("expected {} cells, found {}", header.len(), cells.len()),
                });
            }
            rows.push(cells);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Reads a newline-separated list, ignoring blank lines and `#` comments.
pub fn read_list(path: &Path) -> Result<Vec<String>> {
    Ok(parse_list(&std::fs::read_to_string(path)?))
}

pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
