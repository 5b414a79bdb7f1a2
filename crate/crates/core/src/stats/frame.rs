use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::table::{opt_num, Table, TsvWriter};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Factor(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Factor(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// NaN counts as missing.
    pub fn is_present(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_some_and(|x| !x.is_nan()),
            Column::Factor(v) => v[row].is_some(),
        }
    }

    pub(crate) fn cell(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => opt_num(v[row]),
            Column::Factor(v) => v[row].clone().unwrap_or_default(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Factor(v) => Column::Factor(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }
}

/// Rows that survived a missing-value screen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub rows: Vec<usize>,
    pub dropped: usize,
}

/// Flat table of per-row metrics keyed by paper or author ID.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisFrame {
    key_name: String,
    keys: Vec<String>,
    columns: Vec<(String, Column)>,
}

impl AnalysisFrame {
    pub fn new(key_name: impl Into<String>, keys: Vec<String>) -> Self {
        Self {
            key_name: key_name.into(),
            keys,
            columns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key_name(&self) -> &str {
        &self.key_name
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    fn push(&mut self, name: &str, col: Column) -> Result<()> {
        if col.len() != self.len() {
            return Err(Error::ColumnLength {
                column: name.to_string(),
                expected: self.len(),
                found: col.len(),
            });
        }
        match self.columns.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = col,
            None => self.columns.push((name.to_string(), col)),
        }
        Ok(())
    }

    pub fn add_numeric(&mut self, name: &str, values: Vec<Option<f64>>) -> Result<()> {
        self.push(name, Column::Numeric(values))
    }

    pub fn add_factor(&mut self, name: &str, values: Vec<Option<String>>) -> Result<()> {
        self.push(name, Column::Factor(values))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>]> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            Column::Factor(_) => Err(Error::InvalidArgument(format!(
                "column `{name}` is categorical, a numeric column is required"
            ))),
        }
    }

    /// Rows where every named column has a value.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Selection> {
        let cols: Vec<&Column> = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<_>>()?;
        let rows: Vec<usize> = (0..self.len())
            .filter(|&r| cols.iter().all(|c| c.is_present(r)))
            .collect();
        Ok(Selection {
            dropped: self.len() - rows.len(),
            rows,
        })
    }

    pub fn numeric_at(&self, name: &str, rows: &[usize]) -> Result<Vec<f64>> {
        let v = self.numeric(name)?;
        Ok(rows
            .iter()
            .map(|&r| v[r].expect("row screened for missing values"))
            .collect())
    }

    /// Dense level codes for a column treated as categorical. Levels are
    /// numbered in sorted order of their values, so codes do not depend on
    /// row order. Numeric columns are grouped by exact value.
    pub fn factor_codes(&self, name: &str, rows: &[usize]) -> Result<Vec<u32>> {
        match self.column(name)? {
            Column::Factor(v) => {
                let mut levels: BTreeMap<&str, u32> = rows
                    .iter()
                    .map(|&r| (v[r].as_deref().unwrap(), 0))
                    .collect();
                for (i, code) in levels.values_mut().enumerate() {
                    *code = i as u32;
                }
                Ok(rows
                    .iter()
                    .map(|&r| levels[v[r].as_deref().unwrap()])
                    .collect())
            }
            Column::Numeric(v) => {
                let mut vals: Vec<f64> = rows.iter().map(|&r| v[r].unwrap()).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                Ok(rows
                    .iter()
                    .map(|&r| {
                        let x = v[r].unwrap();
                        vals.binary_search_by(|p| p.total_cmp(&x)).unwrap() as u32
                    })
                    .collect())
            }
        }
    }

    pub fn select(&self, rows: &[usize]) -> AnalysisFrame {
        AnalysisFrame {
            key_name: self.key_name.clone(),
            keys: rows.iter().map(|&r| self.keys[r].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), c.select(rows)))
                .collect(),
        }
    }

    /// Partitions rows by the value of a column, labelled as it would be
    /// written; rows missing that value are left out.
    pub fn split_by(&self, name: &str) -> Result<BTreeMap<String, AnalysisFrame>> {
        let col = self.column(name)?;
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in (0..self.len()).filter(|&r| col.is_present(r)) {
            groups.entry(col.cell(r)).or_default().push(r);
        }
        Ok(groups
            .into_iter()
            .map(|(k, rows)| (k, self.select(&rows)))
            .collect())
    }

    pub fn to_tsv(&self) -> String {
        let mut header = vec![self.key_name.clone()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        let mut w = TsvWriter::new(&header);
        for r in 0..self.len() {
            let mut row = vec![self.keys[r].clone()];
            row.extend(self.columns.iter().map(|(_, c)| c.cell(r)));
            w.row(row);
        }
        w.finish()
    }

    /// Reads a frame written by [`AnalysisFrame::to_tsv`]. The first column
    /// is the key; a column is numeric when every nonempty cell parses as a
    /// number, otherwise categorical. Empty cells are missing.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let t = Table::parse(text)?;
        let keys = t.rows.iter().map(|r| r[0].clone()).collect();
        let mut frame = AnalysisFrame::new(t.header[0].clone(), keys);
        for (ci, name) in t.header.iter().enumerate().skip(1) {
            let cells: Vec<&str> = t.rows.iter().map(|r| r[ci].as_str()).collect();
            let parsed: Option<Vec<Option<f64>>> = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Some(None)
                    } else {
                        c.parse::<f64>().ok().map(Some)
                    }
                })
                .collect();
            match parsed {
                Some(nums) => frame.add_numeric(name, nums)?,
                None => frame.add_factor(
                    name,
                    cells
                        .iter()
                        .map(|c| (!c.is_empty()).then(|| c.to_string()))
                        .collect(),
                )?,
            }
        }
        Ok(frame)
    }
}
