use nalgebra::{DMatrix, DVector};
use pivotscope::stats::{demean, FeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Residuals of y on an intercept plus one dummy per level of every factor.
/// The dense design is orthonormalized column by column (Gram-Schmidt applied
/// twice for stability); redundant dummies reduce to zero and are skipped.
fn dummy_ols_residuals(y: &[f64], factors: &[Vec<u32>]) -> Vec<f64> {
    let n = y.len();
    let mut cols: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0)];
    for f in factors {
        let levels = f.iter().max().map_or(0, |&m| m + 1);
        for l in 0..levels {
            cols.push(DVector::from_iterator(
                n,
                f.iter().map(|&c| f64::from(c == l)),
            ));
        }
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in cols {
        let norm0 = c.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = c;
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 * norm0 {
            basis.push(v / norm);
        }
    }
    let q = DMatrix::from_columns(&basis);
    let yv = DVector::from_column_slice(y);
    let fitted = &q * (q.transpose() * &yv);
    (yv - fitted).iter().copied().collect()
}

fn instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<u32>>) {
    let n = rng.random_range(5..=200);
    let k = rng.random_range(1..=3);
    let factors: Vec<Vec<u32>> = (0..k)
        .map(|_| {
            let levels = rng.random_range(1..=(n as u32 / 3).max(2));
            (0..n).map(|_| rng.random_range(0..levels)).collect()
        })
        .collect();
    let effects: Vec<Vec<f64>> = factors
        .iter()
        .map(|_| (0..200).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let fe: f64 = factors
                .iter()
                .zip(&effects)
                .map(|(f, e)| e[f[i] as usize])
                .sum();
            fe + rng.random_range(-1.0..1.0)
        })
        .collect();
    (y, factors)
}

#[test]
fn alternating_projections_match_dummy_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (y, factors) = instance(&mut rng);
        let d = demean(&y, &factors, FeOptions::default()).unwrap();
        let oracle = dummy_ols_residuals(&y, &factors);
        for (a, b) in d.residuals.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("worst deviation {worst:e}");
    assert!(worst <= 1e-8, "worst deviation {worst:e}");
}

#[test]
fn one_factor_demeaning_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (y, mut factors) = instance(&mut rng);
        factors.truncate(1);
        let once = demean(&y, &factors, FeOptions::default()).unwrap();
        let again = demean(&once.residuals, &factors, FeOptions::default()).unwrap();
        for (a, b) in once.residuals.iter().zip(&again.residuals) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
