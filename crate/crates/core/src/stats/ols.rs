use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;
use crate::table::{num, opt_num, TsvWriter};

use super::fe::{demean_fe, FeOptions};
use super::frame::AnalysisFrame;

/// Columns whose orthogonal component is this small relative to their norm
/// are treated as linear combinations of earlier columns.
const RANK_TOL: f64 = 1e-10;

pub const INTERCEPT: &str = "(intercept)";

/// Least-squares fit with classical (homoskedastic) standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n: usize,
    pub rss: f64,
    /// Rows left out for missing values.
    pub dropped: usize,
}

impl OlsFit {
    fn position(&self, term: &str) -> Result<usize> {
        self.terms
            .iter()
            .position(|t| t == term)
            .ok_or_else(|| Error::UnknownColumn(term.to_string()))
    }

    pub fn coef(&self, term: &str) -> Result<f64> {
        Ok(self.coefficients[self.position(term)?])
    }

    pub fn std_error(&self, term: &str) -> Result<f64> {
        Ok(self.std_errors[self.position(term)?])
    }

    pub fn df(&self) -> usize {
        self.n - self.terms.len()
    }

    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["term", "coefficient", "std_error", "se_type", "n"]);
        for i in 0..self.terms.len() {
            w.row([
                self.terms[i].clone(),
                num(self.coefficients[i]),
                num(self.std_errors[i]),
                "ols".to_string(),
                self.n.to_string(),
            ]);
        }
        w.finish()
    }
}

/// Fits `y` on an intercept plus `columns` by Householder QR.
pub fn ols_columns(y: &[f64], columns: &[(&str, &[f64])]) -> Result<OlsFit> {
    let n = y.len();
    let p = columns.len() + 1;
    for (name, c) in columns {
        if c.len() != n {
            return Err(Error::ColumnLength {
                column: name.to_string(),
                expected: n,
                found: c.len(),
            });
        }
    }
    if n < p {
        return Err(Error::TooFewRows {
            needed: p,
            found: n,
        });
    }
    let mut terms = vec![INTERCEPT.to_string()];
    terms.extend(columns.iter().map(|(name, _)| name.to_string()));
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1].1[i] });
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            return Err(Error::RankDeficient(terms[j].clone()));
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, p).into_owned();
    let beta = r
        .solve_upper_triangular(&head)
        .ok_or_else(|| Error::RankDeficient(terms[p - 1].clone()))?;
    let rss: f64 = qty.rows(p, n - p).iter().map(|v| v * v).sum();
    let df = n - p;
    let sigma2 = if df > 0 { rss / df as f64 } else { f64::NAN };
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::RankDeficient(terms[p - 1].clone()))?;
    let std_errors = (0..p)
        .map(|i| (sigma2 * r_inv.row(i).norm_squared()).sqrt())
        .collect();
    Ok(OlsFit {
        terms,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        n,
        rss,
        dropped: 0,
    })
}

/// Regresses `y` on an intercept and the named numeric columns.
pub fn ols(frame: &AnalysisFrame, y: &str, xs: &[&str]) -> Result<OlsFit> {
    let mut needed = vec![y];
    needed.extend_from_slice(xs);
    let sel = frame.complete_rows(&needed)?;
    let yv = frame.numeric_at(y, &sel.rows)?;
    let cols: Vec<Vec<f64>> = xs
        .iter()
        .map(|c| frame.numeric_at(c, &sel.rows))
        .collect::<Result<_>>()?;
    let named: Vec<(&str, &[f64])> = xs
        .iter()
        .copied()
        .zip(cols.iter().map(Vec::as_slice))
        .collect();
    let mut fit = ols_columns(&yv, &named)?;
    fit.dropped = sel.dropped;
    Ok(fit)
}

/// Slope of `y` on `x` after absorbing the named fixed effects from both
/// (Frisch-Waugh). Standard errors are plain OLS on the residualized data,
/// without a degrees-of-freedom correction for the absorbed levels.
pub fn ols_within(
    frame: &AnalysisFrame,
    y: &str,
    x: &str,
    factors: &[&str],
    opts: FeOptions,
) -> Result<OlsFit> {
    if factors.is_empty() {
        return ols(frame, y, &[x]);
    }
    let mut needed = vec![y, x];
    needed.extend_from_slice(factors);
    let sel = frame.complete_rows(&needed)?;
    let sub = frame.select(&sel.rows);
    let ry = demean_fe(&sub, y, factors, opts)?.demeaned.residuals;
    let rx = demean_fe(&sub, x, factors, opts)?.demeaned.residuals;
    let mut fit = ols_columns(&ry, &[(x, &rx)])?;
    fit.dropped = sel.dropped;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    /// Coefficient on `x * year`: the change in the `x` slope per year.
    pub interaction: f64,
    pub std_error: f64,
    /// Year subtracted before forming the interaction.
    pub year_center: f64,
    pub fit: OlsFit,
}

pub const TREND_TERM: &str = "x:year";

/// Regresses `y` on `x`, year, and their product. Year is centered on its
/// sample mean for conditioning; the interaction coefficient is unchanged
/// by the shift.
pub fn slope_trend(frame: &AnalysisFrame, y: &str, x: &str, year: &str) -> Result<TrendFit> {
    let sel = frame.complete_rows(&[y, x, year])?;
    let yv = frame.numeric_at(y, &sel.rows)?;
    let xv = frame.numeric_at(x, &sel.rows)?;
    let yr = frame.numeric_at(year, &sel.rows)?;
    if yr.is_empty() {
        return Err(Error::TooFewRows {
            needed: 4,
            found: 0,
        });
    }
    let center = yr.iter().sum::<f64>() / yr.len() as f64;
    let yc: Vec<f64> = yr.iter().map(|v| v - center).collect();
    let inter: Vec<f64> = xv.iter().zip(&yc).map(|(a, b)| a * b).collect();
    let mut fit = ols_columns(&yv, &[(x, &xv), (year, &yc), (TREND_TERM, &inter)])?;
    fit.dropped = sel.dropped;
    Ok(TrendFit {
        interaction: fit.coef(TREND_TERM)?,
        std_error: fit.std_error(TREND_TERM)?,
        year_center: center,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSlope {
    Fitted {
        slope: f64,
        std_error: f64,
    },
    TooFew,
    /// Fit failed, usually because `x` does not vary within the field.
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlopeRow {
    pub field: String,
    pub n: usize,
    pub slope: FieldSlope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlopeTable {
    pub rows: Vec<FieldSlopeRow>,
    pub min_papers: usize,
}

impl FieldSlopeTable {
    pub fn qualifying(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r.slope, FieldSlope::Fitted { .. }))
            .count()
    }

    pub fn negative(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| matches!(r.slope, FieldSlope::Fitted { slope, .. } if slope < 0.0))
            .count()
    }

    /// Share of fitted fields with a negative slope.
    pub fn negative_share(&self) -> Option<f64> {
        let q = self.qualifying();
        (q > 0).then(|| self.negative() as f64 / q as f64)
    }

    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["field", "n", "slope", "std_error", "status"]);
        for r in &self.rows {
            let (slope, se, status) = match &r.slope {
                FieldSlope::Fitted { slope, std_error } => {
                    (Some(*slope), Some(*std_error), "fitted".to_string())
                }
                FieldSlope::TooFew => (None, None, "too-few-papers".to_string()),
                FieldSlope::Degenerate(term) => (None, None, format!("degenerate:{term}")),
            };
            w.row([
                r.field.clone(),
                r.n.to_string(),
                opt_num(slope),
                opt_num(se),
                status,
            ]);
        }
        w.row([
            "(negative-share)".to_string(),
            self.qualifying().to_string(),
            opt_num(self.negative_share()),
            String::new(),
            format!("negative:{}", self.negative()),
        ]);
        w.finish()
    }
}

/// Per-field OLS slope of `y` on `x`. Fields with fewer than `min_papers`
/// complete rows are listed but excluded from the share.
pub fn field_slope_table(
    frame: &AnalysisFrame,
    field: &str,
    y: &str,
    x: &str,
    min_papers: usize,
) -> Result<FieldSlopeTable> {
    frame.numeric(y)?;
    frame.numeric(x)?;
    let groups: Vec<(String, AnalysisFrame)> = frame.split_by(field)?.into_iter().collect();
    let rows = par::map(&groups, |(name, sub)| {
        let n = sub
            .complete_rows(&[y, x])
            .map(|s| s.rows.len())
            .unwrap_or(0);
        let slope = if n < min_papers {
            FieldSlope::TooFew
        } else {
            match ols(sub, y, &[x]) {
                Ok(fit) => FieldSlope::Fitted {
                    slope: fit.coefficients[1],
                    std_error: fit.std_errors[1],
                },
                Err(Error::RankDeficient(term)) => FieldSlope::Degenerate(term),
                Err(e) => FieldSlope::Degenerate(e.to_string()),
            }
        };
        FieldSlopeRow {
            field: name.clone(),
            n,
            slope,
        }
    });
    Ok(FieldSlopeTable { rows, min_papers })
}
