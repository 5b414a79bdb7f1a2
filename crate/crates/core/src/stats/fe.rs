use crate::error::{Error, Result};

use super::frame::AnalysisFrame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeOptions {
    /// Stop once no level mean moves by more than this in a sweep.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FeOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demeaned {
    pub residuals: Vec<f64>,
    pub grand_mean: f64,
    /// Accumulated effect per level, one vector per factor.
    pub effects: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Largest level-mean update in the final sweep.
    pub max_update: f64,
}

struct Sweeper<'a> {
    factors: &'a [Vec<u32>],
    counts: Vec<Vec<f64>>,
    sums: Vec<f64>,
}

#[derive(Clone)]
struct State {
    r: Vec<f64>,
    effects: Vec<Vec<f64>>,
}

impl Sweeper<'_> {
    /// One pass of within-level demeaning over every factor in turn.
    /// Returns the largest level mean removed.
    fn sweep(&mut self, s: &mut State) -> f64 {
        let mut max_update = 0.0f64;
        for (k, f) in self.factors.iter().enumerate() {
            let counts = &self.counts[k];
            self.sums.clear();
            self.sums.resize(counts.len(), 0.0);
            for (ri, &code) in s.r.iter().zip(f) {
                self.sums[code as usize] += ri;
            }
            for (m, &c) in self.sums.iter_mut().zip(counts) {
                if c > 0.0 {
                    *m /= c;
                }
            }
            for (ri, &code) in s.r.iter_mut().zip(f) {
                *ri -= self.sums[code as usize];
            }
            for (e, m) in s.effects[k].iter_mut().zip(&self.sums) {
                *e += m;
                max_update = max_update.max(m.abs());
            }
        }
        max_update
    }
}

/// Irons-Tuck step from `x`, `f1 = F(x)`, `f2 = F(F(x))`. The result is an
/// affine combination of the inputs, so it stays of the form `y - D * theta`.
fn extrapolate(x: &State, f1: &State, f2: &State) -> Option<State> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.r.len() {
        let d1 = f2.r[i] - f1.r[i];
        let d2 = f2.r[i] - 2.0 * f1.r[i] + x.r[i];
        num += d1 * d2;
        den += d2 * d2;
    }
    if den.is_nan() || den <= 0.0 {
        return None;
    }
    let a = num / den;
    let mix = |two: f64, one: f64| two - a * (two - one);
    Some(State {
        r: f2.r.iter().zip(&f1.r).map(|(&t, &o)| mix(t, o)).collect(),
        effects: f2
            .effects
            .iter()
            .zip(&f1.effects)
            .map(|(t, o)| t.iter().zip(o).map(|(&t, &o)| mix(t, o)).collect())
            .collect(),
    })
}

/// Removes additive factor effects from `values` by alternating projections
/// with Irons-Tuck acceleration.
///
/// `factors[k][i]` is the level code of row `i` on factor `k`; codes should be
/// dense but empty levels are harmless. One factor is absorbed exactly in a
/// single sweep. With several, sweeps repeat until no level mean removed in
/// a sweep exceeds the tolerance.
pub fn demean(values: &[f64], factors: &[Vec<u32>], opts: FeOptions) -> Result<Demeaned> {
    let n = values.len();
    if n == 0 {
        return Err(Error::TooFewRows {
            needed: 1,
            found: 0,
        });
    }
    for f in factors {
        if f.len() != n {
            return Err(Error::ColumnLength {
                column: "factor".into(),
                expected: n,
                found: f.len(),
            });
        }
    }
    let grand_mean = values.iter().sum::<f64>() / n as f64;
    let counts: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| {
            let levels = f.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
            let mut c = vec![0.0; levels];
            for &code in f {
                c[code as usize] += 1.0;
            }
            c
        })
        .collect();
    let mut state = State {
        r: values.iter().map(|v| v - grand_mean).collect(),
        effects: counts.iter().map(|c| vec![0.0; c.len()]).collect(),
    };
    let done = |state: State, iterations, max_update| {
        Ok(Demeaned {
            residuals: state.r,
            grand_mean,
            effects: state.effects,
            iterations,
            max_update,
        })
    };
    if factors.is_empty() {
        return done(state, 0, 0.0);
    }
    let mut sw = Sweeper {
        factors,
        counts,
        sums: Vec::new(),
    };
    let mut iterations = 0;
    loop {
        let mut f1 = state.clone();
        let u1 = sw.sweep(&mut f1);
        iterations += 1;
        if factors.len() == 1 || u1 <= opts.tolerance {
            return done(f1, iterations, u1);
        }
        let mut f2 = f1.clone();
        let u2 = sw.sweep(&mut f2);
        iterations += 1;
        if u2 <= opts.tolerance {
            return done(f2, iterations, u2);
        }
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: u2,
            });
        }
        state = extrapolate(&state, &f1, &f2).unwrap_or(f2);
    }
}

/// Demeaned column together with the rows it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDemeaned {
    pub rows: Vec<usize>,
    pub dropped: usize,
    pub demeaned: Demeaned,
}

/// Residualizes `column` on the named categorical columns, dropping rows
/// where any of them is missing.
pub fn demean_fe(
    frame: &AnalysisFrame,
    column: &str,
    factors: &[&str],
    opts: FeOptions,
) -> Result<FrameDemeaned> {
    let mut needed = vec![column];
    needed.extend_from_slice(factors);
    let sel = frame.complete_rows(&needed)?;
    let values = frame.numeric_at(column, &sel.rows)?;
    let codes: Vec<Vec<u32>> = factors
        .iter()
        .map(|f| frame.factor_codes(f, &sel.rows))
        .collect::<Result<_>>()?;
    let demeaned = demean(&values, &codes, opts)?;
    Ok(FrameDemeaned {
        rows: sel.rows,
        dropped: sel.dropped,
        demeaned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_factor_subtracts_group_means() {
        let y = [1.0, 3.0, 10.0, 14.0, 5.0];
        let g = vec![0, 0, 1, 1, 2];
        let d = demean(&y, &[g], FeOptions::default()).unwrap();
        let want = [-1.0, 1.0, -2.0, 2.0, 0.0];
        for (a, b) in d.residuals.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(d.iterations, 1);
    }

    #[test]
    fn additive_two_way_effects_vanish() {
        let mut y = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..6u32 {
            for j in 0..4u32 {
                if (i + j) % 3 == 0 {
                    continue;
                }
                y.push(2.0 * i as f64 - 3.0 * (j as f64).powi(2) + 7.0);
                a.push(i);
                b.push(j);
            }
        }
        let d = demean(&y, &[a, b], FeOptions::default()).unwrap();
        for r in &d.residuals {
            assert_abs_diff_eq!(*r, 0.0, epsilon = 1e-9);
        }
        assert!(d.max_update <= 1e-10);
    }

    #[test]
    fn residuals_are_centered_within_every_level() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let a: Vec<u32> = (0..40).map(|i| i % 3).collect();
        let b: Vec<u32> = (0..40).map(|i| (i / 7) % 4).collect();
        let d = demean(&y, &[a.clone(), b.clone()], FeOptions::default()).unwrap();
        for f in [&a, &b] {
            for level in 0..4 {
                let s: f64 = d
                    .residuals
                    .iter()
                    .zip(f.iter())
                    .filter(|(_, &c)| c == level)
                    .map(|(r, _)| r)
                    .sum();
                assert_abs_diff_eq!(s, 0.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn reports_non_convergence() {
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let a: Vec<u32> = (0..30).map(|i| i % 5).collect();
        let b: Vec<u32> = (0..30).map(|i| (i * 7) % 6).collect();
        let opts = FeOptions {
            tolerance: 0.0,
            max_iter: 4,
        };
        assert!(matches!(
            demean(&y, &[a, b], opts),
            Err(Error::NoConvergence { iterations: 4, .. })
        ));
    }
}
