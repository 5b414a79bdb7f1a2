use crate::error::{Error, Result};
use crate::table::{num, TsvWriter};

use super::fe::{demean_fe, FeOptions};
use super::frame::AnalysisFrame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub mean_x: f64,
    pub mean_y: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinTable {
    pub bins: Vec<Bin>,
    /// Rows left out for missing values.
    pub dropped: usize,
}

impl BinTable {
    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["bin", "mean_x", "mean_y", "n"]);
        for (i, b) in self.bins.iter().enumerate() {
            w.row([
                (i + 1).to_string(),
                num(b.mean_x),
                num(b.mean_y),
                b.n.to_string(),
            ]);
        }
        w.finish()
    }
}

/// Sizes of `bins` consecutive chunks of `n` rows; the first `n % bins`
/// chunks carry one extra row.
pub fn bin_sizes(n: usize, bins: usize) -> Vec<usize> {
    let base = n / bins;
    let extra = n % bins;
    (0..bins).map(|i| base + usize::from(i < extra)).collect()
}

/// Equal-count bins of `x`, reporting the mean of `x` and `y` in each. Rows
/// are ordered by `x` with ties kept in input order.
pub fn bin_means(x: &[f64], y: &[f64], bins: usize) -> Result<Vec<Bin>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".into()));
    }
    if x.len() != y.len() {
        return Err(Error::ColumnLength {
            column: "y".into(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < bins {
        return Err(Error::TooFewRows {
            needed: bins,
            found: x.len(),
        });
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(bins);
    let mut start = 0;
    for size in bin_sizes(x.len(), bins) {
        let chunk = &order[start..start + size];
        start += size;
        let sx: f64 = chunk.iter().map(|&i| x[i]).sum();
        let sy: f64 = chunk.iter().map(|&i| y[i]).sum();
        out.push(Bin {
            mean_x: sx / size as f64,
            mean_y: sy / size as f64,
            n: size,
        });
    }
    Ok(out)
}

pub fn binscatter(frame: &AnalysisFrame, x: &str, y: &str, bins: usize) -> Result<BinTable> {
    let sel = frame.complete_rows(&[x, y])?;
    let xs = frame.numeric_at(x, &sel.rows)?;
    let ys = frame.numeric_at(y, &sel.rows)?;
    Ok(BinTable {
        bins: bin_means(&xs, &ys, bins)?,
        dropped: sel.dropped,
    })
}

/// Binscatter of `y` on `x` after absorbing the named fixed effects from
/// both. Sample means are added back so bins stay on the original scale.
pub fn residualized_binscatter(
    frame: &AnalysisFrame,
    x: &str,
    y: &str,
    factors: &[&str],
    bins: usize,
    opts: FeOptions,
) -> Result<BinTable> {
    let mut needed = vec![x, y];
    needed.extend_from_slice(factors);
    let sel = frame.complete_rows(&needed)?;
    let sub = frame.select(&sel.rows);
    let dx = demean_fe(&sub, x, factors, opts)?.demeaned;
    let dy = demean_fe(&sub, y, factors, opts)?.demeaned;
    let xs: Vec<f64> = dx.residuals.iter().map(|r| r + dx.grand_mean).collect();
    let ys: Vec<f64> = dy.residuals.iter().map(|r| r + dy.grand_mean).collect();
    Ok(BinTable {
        bins: bin_means(&xs, &ys, bins)?,
        dropped: sel.dropped,
    })
}
