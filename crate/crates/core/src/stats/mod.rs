//! Binned scatterplots, fixed-effect residualization, and least-squares
//! slopes over per-paper analysis frames.

mod binscatter;
mod fe;
mod frame;
mod ols;

pub use binscatter::{bin_means, bin_sizes, binscatter, residualized_binscatter, Bin, BinTable};
pub use fe::{demean, demean_fe, Demeaned, FeOptions, FrameDemeaned};
pub use frame::{AnalysisFrame, Column, Selection};
pub use ols::{
    field_slope_table, ols, ols_columns, ols_within, slope_trend, FieldSlope, FieldSlopeRow,
    FieldSlopeTable, OlsFit, TrendFit, INTERCEPT, TREND_TERM,
};

/// Mean of a numeric column within each combination of grouping columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMeans {
    pub value: String,
    pub by: Vec<String>,
    /// Sorted by group labels.
    pub rows: Vec<(Vec<String>, usize, f64)>,
    pub dropped: usize,
}

impl GroupMeans {
    pub fn to_tsv(&self) -> String {
        let mut header = self.by.clone();
        header.push("n".into());
        header.push(format!("mean_{}", self.value));
        let mut w = crate::table::TsvWriter::new(&header);
        for (labels, n, mean) in &self.rows {
            let mut row = labels.clone();
            row.push(n.to_string());
            row.push(crate::table::num(*mean));
            w.row(row);
        }
        w.finish()
    }
}

pub fn group_means(frame: &AnalysisFrame, value: &str, by: &[&str]) -> crate::Result<GroupMeans> {
    let mut needed = vec![value];
    needed.extend_from_slice(by);
    let sel = frame.complete_rows(&needed)?;
    let values = frame.numeric_at(value, &sel.rows)?;
    let cols: Vec<&Column> = by
        .iter()
        .map(|b| frame.column(b))
        .collect::<crate::Result<_>>()?;
    let mut acc: std::collections::BTreeMap<Vec<String>, (usize, f64)> = Default::default();
    for (&r, v) in sel.rows.iter().zip(&values) {
        let key = cols.iter().map(|c| c.cell(r)).collect();
        let e = acc.entry(key).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += v;
    }
    Ok(GroupMeans {
        value: value.to_string(),
        by: by.iter().map(|b| b.to_string()).collect(),
        rows: acc
            .into_iter()
            .map(|(k, (n, s))| (k, n, s / n as f64))
            .collect(),
        dropped: sel.dropped,
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or the inputs have fewer than two points.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
