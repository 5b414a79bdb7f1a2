//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pivotscope::careers::{match_controls, CareerProfile, UnmatchedReason};
use pivotscope::corpus::{ingest_str, Corpus, PaperRecord, PubDate};
use pivotscope::metrics::{hit_flags, HitEntry, HitParams};
use pivotscope::par;
use pivotscope::pipeline::{paper_frame, report, FrameOptions, ReportOptions};
use pivotscope::pivot::{
    pivot_between, pivot_size, PivotResult, PivotWindow, UndefinedReason, VenueVector,
};
use pivotscope::stats::{
    bin_means, bin_sizes, demean_fe, field_slope_table, slope_trend, spearman, AnalysisFrame,
    FeOptions,
};
use pivotscope::synth::{generate, SynthConfig};
use pivotscope::tagger::{build_relfreq, relfreq_score, RelFreqParams};
use pivotscope::IngestConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn date(y: i32, m: u32, d: u32) -> PubDate {
    PubDate::parse(&format!("{y:04}-{m:02}-{d:02}")).unwrap()
}

// Pivot oracle

struct DenseCorpus {
    year: Vec<i32>,
    venue: Vec<Option<usize>>,
    refs: Vec<Vec<usize>>,
    authors: Vec<Vec<usize>>,
    n_venues: usize,
}

fn random_dense(rng: &mut ChaCha8Rng) -> DenseCorpus {
    let n = rng.random_range(2..=50);
    let n_venues = rng.random_range(1..=6);
    let n_authors = rng.random_range(1..=6);
    let year = (0..n).map(|_| rng.random_range(2010..=2016)).collect();
    let venue = (0..n)
        .map(|_| (rng.random::<f64>() >= 0.15).then(|| rng.random_range(0..n_venues)))
        .collect();
    let refs = (0..n)
        .map(|i| {
            let k = rng.random_range(0..=8);
            let mut out: BTreeSet<usize> = BTreeSet::new();
            for _ in 0..k {
                let t = rng.random_range(0..n);
                if t != i {
                    out.insert(t);
                }
            }
            out.into_iter().collect()
        })
        .collect();
    let authors = (0..n)
        .map(|_| {
            let k = rng.random_range(0..=3);
            let mut out: BTreeSet<usize> = BTreeSet::new();
            for _ in 0..k {
                out.insert(rng.random_range(0..n_authors));
            }
            out.into_iter().collect()
        })
        .collect();
    DenseCorpus {
        year,
        venue,
        refs,
        authors,
        n_venues,
    }
}

fn to_corpus(d: &DenseCorpus, rng: &mut ChaCha8Rng) -> Corpus {
    let records = (0..d.year.len())
        .map(|i| {
            let mut r = PaperRecord::new(
                format!("p{i:02}"),
                date(
                    d.year[i],
                    rng.random_range(1..=12),
                    rng.random_range(1..=28),
                ),
            );
            r.venue_id = d.venue[i].map(|v| format!("v{v}"));
            r.references = d.refs[i].iter().map(|t| format!("p{t:02}")).collect();
            r.author_ids = d.authors[i].iter().map(|a| format!("a{a}")).collect();
            r
        })
        .collect();
    Corpus::from_records(records)
}

fn dense_counts(d: &DenseCorpus, paper: usize, into: &mut [f64]) {
    for &t in &d.refs[paper] {
        if let Some(v) = d.venue[t] {
            into[v] += 1.0;
        }
    }
}

/// Direct formula over dense venue-count vectors.
fn naive_pivot(d: &DenseCorpus, author: usize, paper: usize, window: PivotWindow) -> PivotResult {
    let y = d.year[paper];
    let mut focal = vec![0.0; d.n_venues];
    dense_counts(d, paper, &mut focal);
    let mut prior = vec![0.0; d.n_venues];
    let mut any = false;
    for q in 0..d.year.len() {
        let yq = d.year[q];
        let admitted = match window {
            PivotWindow::ThreeYear => yq >= y - 3 && yq < y,
            PivotWindow::FullCareer => yq < y,
        };
        if q != paper && admitted && d.authors[q].contains(&author) {
            any = true;
            dense_counts(d, q, &mut prior);
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !any {
        return PivotResult::Undefined(UndefinedReason::NoPriorPapers);
    }
    if norm(&focal) == 0.0 {
        return PivotResult::Undefined(UndefinedReason::NoResolvableVenuesFocal);
    }
    if norm(&prior) == 0.0 {
        return PivotResult::Undefined(UndefinedReason::NoResolvableVenuesPrior);
    }
    let dot: f64 = focal.iter().zip(&prior).map(|(a, b)| a * b).sum();
    let phi = 1.0 - dot / (norm(&focal) * norm(&prior));
    PivotResult::Defined(phi.clamp(0.0, 1.0))
}

fn pivot_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut compared, mut defined, mut worst) = (0usize, 0usize, 0.0f64);
    for instance in 0..1000 {
        let d = random_dense(&mut rng);
        let corpus = to_corpus(&d, &mut rng);
        for p in 0..d.year.len() {
            for &a in &d.authors[p] {
                for window in [PivotWindow::ThreeYear, PivotWindow::FullCareer] {
                    let got = pivot_size(&corpus, &format!("a{a}"), &format!("p{p:02}"), window)
                        .map_err(|e| format!("instance {instance}: {e}"))?;
                    let want = naive_pivot(&d, a, p, window);
                    compared += 1;
                    match (got, want) {
                        (PivotResult::Defined(g), PivotResult::Defined(w)) => {
                            defined += 1;
                            worst = worst.max((g - w).abs());
                        }
                        (PivotResult::Undefined(g), PivotResult::Undefined(w)) if g == w => {}
                        _ => {
                            return Err(format!(
                                "instance {instance} a{a} p{p}: {got:?} vs {want:?}"
                            ))
                        }
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "{compared} author-paper pivots ({defined} defined), max deviation {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// Pivot invariants

fn random_vector(rng: &mut ChaCha8Rng, universe: u32) -> Vec<(u32, f64)> {
    let k = rng.random_range(1..=20);
    (0..k)
        .map(|_| (rng.random_range(0..universe), rng.random_range(0.1..10.0)))
        .collect()
}

fn vv(w: &[(u32, f64)]) -> VenueVector {
    VenueVector::from_weights(w.iter().copied()).unwrap()
}

fn pivot_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    const U: u32 = 50;
    const P: u32 = 101;
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let a = random_vector(&mut rng, U);
        let b = random_vector(&mut rng, U);
        let (va, vb) = (vv(&a), vv(&b));
        let phi = pivot_between(&va, &vb);
        ensure((0.0..=1.0).contains(&phi), || {
            format!("pair {i}: phi {phi} out of range")
        })?;

        let c = rng.random_range(-5.0f64..5.0).exp();
        let scaled: Vec<(u32, f64)> = a.iter().map(|&(v, w)| (v, w * c)).collect();
        let prop = pivot_between(&va, &vv(&scaled));
        ensure(prop <= 1e-12, || {
            format!("pair {i}: proportional phi {prop:e}")
        })?;

        let shifted: Vec<(u32, f64)> = b.iter().map(|&(v, w)| (v + U, w)).collect();
        let disjoint = pivot_between(&va, &vv(&shifted));
        ensure(disjoint == 1.0, || {
            format!("pair {i}: disjoint phi {disjoint}")
        })?;

        let c2 = rng.random_range(-5.0f64..5.0).exp();
        let scaled_b: Vec<(u32, f64)> = b.iter().map(|&(v, w)| (v, w * c2)).collect();
        for s in [
            pivot_between(&vv(&scaled), &vb),
            pivot_between(&va, &vv(&scaled_b)),
        ] {
            worst = worst.max((s - phi).abs());
        }

        let k = rng.random_range(1..P);
        let shift = rng.random_range(0..P);
        let relabel = |w: &[(u32, f64)]| -> Vec<(u32, f64)> {
            w.iter().map(|&(v, x)| ((k * v + shift) % P, x)).collect()
        };
        let relabelled = pivot_between(&vv(&relabel(&a)), &vv(&relabel(&b)));
        worst = worst.max((relabelled - phi).abs());
    }
    ensure(worst <= 1e-12, || {
        format!("scale/relabel deviation {worst:e}")
    })?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "100000 pairs, scale/relabel max deviation {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// Residualization

/// Residuals of y on an intercept plus one dummy per level of every factor,
/// by projection onto a Gram-Schmidt basis of the dense design.
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

fn residualization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for instance in 0..100 {
        let n = rng.random_range(5..=200);
        let k = rng.random_range(1..=3);
        let factors: Vec<Vec<u32>> = (0..k)
            .map(|_| {
                let levels = rng.random_range(1..=(n as u32 / 3).max(2));
                (0..n).map(|_| rng.random_range(0..levels)).collect()
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let fe: f64 = factors
                    .iter()
                    .enumerate()
                    .map(|(j, f)| (f[i] as f64 * (j as f64 + 1.3)).sin() * 4.0)
                    .sum();
                fe + rng.random_range(-1.0..1.0)
            })
            .collect();
        let mut frame = AnalysisFrame::new("id", (0..n).map(|i| format!("r{i}")).collect());
        frame
            .add_numeric("y", y.iter().map(|&v| Some(v)).collect())
            .unwrap();
        let names: Vec<String> = (0..k).map(|j| format!("f{j}")).collect();
        for (name, f) in names.iter().zip(&factors) {
            frame
                .add_factor(name, f.iter().map(|c| Some(format!("L{c}"))).collect())
                .unwrap();
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let got = demean_fe(&frame, "y", &refs, FeOptions::default())
            .map_err(|e| format!("instance {instance}: {e}"))?;
        let want = dummy_ols_residuals(&y, &factors);
        for (g, w) in got.demeaned.residuals.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "100 instances, max deviation {worst:.1e}, {:.2?}",
        start.elapsed()
    ))
}

// Binscatter

fn binscatter_contract() -> Outcome {
    let sizes = bin_sizes(43, 20);
    ensure(
        sizes[..3] == [3, 3, 3] && sizes[3..].iter().all(|&s| s == 2),
        || format!("43/20 sizes {sizes:?}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let n = rng.random_range(1..=400);
        let bins = rng.random_range(1..=n.min(40));
        let x: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..50) as f64) / 7.0)
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = bin_means(&x, &y, bins).map_err(|e| format!("case {case}: {e}"))?;
        let counts: Vec<usize> = got.iter().map(|b| b.n).collect();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        ensure(hi - lo <= 1 && counts.iter().sum::<usize>() == n, || {
            format!("case {case}: sizes {counts:?}")
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let mut at = 0;
        for (i, b) in got.iter().enumerate() {
            let chunk = &order[at..at + b.n];
            at += b.n;
            let mx = chunk.iter().map(|&r| x[r]).sum::<f64>() / b.n as f64;
            let my = chunk.iter().map(|&r| y[r]).sum::<f64>() / b.n as f64;
            ensure(
                (mx - b.mean_x).abs() <= 1e-12 && (my - b.mean_y).abs() <= 1e-12,
                || {
                    format!(
                        "case {case} bin {i}: ({}, {}) vs sorted chunk ({mx}, {my})",
                        b.mean_x, b.mean_y
                    )
                },
            )?;
        }
        let flat = vec![1.75; n];
        let constant = bin_means(&x, &flat, bins).unwrap();
        ensure(
            constant.iter().all(|b| (b.mean_y - 1.75).abs() <= 1e-12),
            || format!("case {case}: constant y not constant"),
        )?;
    }
    Ok("43 rows/20 bins gives 3,3,3,2,...; 500 random partitions match sorted chunks".into())
}

// RelFreq

fn relfreq_contract() -> Outcome {
    let score = relfreq_score(3, 10, 5, 100);
    ensure((score - 20.0 / 3.0).abs() <= 1e-12, || {
        format!("score {score}")
    })?;
    let titles = [
        ("t1", "alpha beta", true),
        ("t2", "alpha gamma", true),
        ("t3", "alpha delta beta", true),
        ("o1", "beta epsilon", false),
        ("o2", "gamma epsilon", false),
        ("o3", "zeta epsilon", false),
        ("o4", "zeta eta", false),
    ];
    let records = titles
        .iter()
        .map(|(id, title, _)| {
            let mut r = PaperRecord::new(*id, date(2020, 3, 1));
            r.title = title.to_string();
            r
        })
        .collect();
    let corpus = Corpus::from_records(records);
    let topic: BTreeSet<String> = titles
        .iter()
        .filter(|t| t.2)
        .map(|t| t.0.to_string())
        .collect();
    let params = RelFreqParams {
        min_topic_papers: 1,
        top_k: 100,
    };
    let full = build_relfreq(&corpus, &topic, 2020, &params, &[]).map_err(|e| e.to_string())?;
    let want_alpha = relfreq_score(3, 3, 0, 4);
    ensure(
        full.score("alpha")
            .is_some_and(|s| (s - want_alpha).abs() <= 1e-12),
        || format!("alpha {:?}", full.score("alpha")),
    )?;
    let pruned = build_relfreq(
        &corpus,
        &topic,
        2020,
        &params,
        &["alpha".into(), "beta".into()],
    )
    .map_err(|e| e.to_string())?;
    ensure(
        pruned.score("alpha").is_none() && pruned.score("beta").is_none(),
        || "excluded words still scored".into(),
    )?;
    let kept: Vec<_> = full
        .entries()
        .iter()
        .filter(|(w, _)| w != "alpha" && w != "beta")
        .cloned()
        .collect();
    ensure(pruned.entries() == kept.as_slice(), || {
        "exclusion changed other scores".into()
    })?;
    Ok(format!(
        "score {score:.15}; exclusions remove only listed words"
    ))
}

// Hit rates

fn hit_contract() -> Outcome {
    let mut records = Vec::new();
    for i in 0..100 {
        let mut r = PaperRecord::new(format!("T{i:03}"), date(2015, 6, 1));
        r.fields_l1 = ["F1".to_string()].into();
        records.push(r);
    }
    for j in 0..100 {
        let mut r = PaperRecord::new(format!("C{j:03}"), date(2016, 6, 1));
        r.fields_l1 = ["F2".to_string()].into();
        r.references = (j + 1..100).map(|i| format!("T{i:03}")).collect();
        records.push(r);
    }
    for k in 0..5 {
        let mut r = PaperRecord::new(format!("S{k}"), date(2015, 6, 1));
        r.fields_l1 = ["F3".to_string()].into();
        records.push(r);
    }
    let corpus = Corpus::from_records(records);
    let hits = hit_flags(&corpus, date(2020, 1, 1).date, HitParams::default());
    let flagged = |prefix: &str| -> Vec<String> {
        corpus
            .papers()
            .iter()
            .enumerate()
            .filter(|(i, r)| {
                r.paper_id.starts_with(prefix) && hits.entry(*i as u32).hit() == Some(true)
            })
            .map(|(_, r)| r.paper_id.clone())
            .collect()
    };
    let distinct = flagged("T");
    ensure(distinct == ["T095", "T096", "T097", "T098", "T099"], || {
        format!("distinct group flagged {distinct:?}")
    })?;
    let tied = flagged("C");
    ensure(tied.len() == 100, || {
        format!("all-ties group flagged {}", tied.len())
    })?;
    let diag = |field: &str| {
        hits.groups
            .iter()
            .find(|g| g.key.fields == [field.to_string()])
            .unwrap()
    };
    let tie = diag("F2");
    ensure(tie.nominal == 5 && tie.tie_inflation == 95, || {
        format!("tie diagnostics {tie:?}")
    })?;
    let small_undefined = corpus
        .papers()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.paper_id.starts_with('S'))
        .all(|(i, _)| matches!(hits.entry(i as u32), HitEntry::SmallGroup { group_size: 5 }));
    ensure(small_undefined && diag("F3").threshold.is_none(), || {
        "small group not undefined".into()
    })?;
    Ok(
        "distinct group flags 5; all-ties flags 100 with tie inflation 95; group of 5 undefined"
            .into(),
    )
}

// Synthetic recovery

fn recovery_config(seed: u64, beta: f64) -> SynthConfig {
    SynthConfig {
        seed,
        n_authors: 20_300,
        n_venues: 200,
        n_fields: 10,
        beta,
        ..SynthConfig::default()
    }
}

struct Recovery {
    papers: usize,
    slope: f64,
    se: f64,
    rho: f64,
    elapsed: Duration,
}

fn run_recovery(config: &SynthConfig) -> Result<Recovery, String> {
    let start = Instant::now();
    par::with_threads(1, || {
        let synth = generate(config).map_err(|e| e.to_string())?;
        let papers = synth.truth.papers.len();
        let (corpus, _) = ingest_str(&synth.to_jsonl(), &IngestConfig::default());
        let corpus = corpus.filter_min_references(5);
        let out = report(&corpus, &ReportOptions::default()).map_err(|e| e.to_string())?;
        let x: Vec<f64> = out.bins.bins.iter().map(|b| b.mean_x).collect();
        let y: Vec<f64> = out.bins.bins.iter().map(|b| b.mean_y).collect();
        Ok(Recovery {
            papers,
            slope: out.slope.coef("pivot").map_err(|e| e.to_string())?,
            se: out.slope.std_error("pivot").map_err(|e| e.to_string())?,
            rho: spearman(&x, &y).unwrap_or(f64::NAN),
            elapsed: start.elapsed(),
        })
    })
}

fn synthetic_recovery() -> Outcome {
    let planted = run_recovery(&recovery_config(1, -0.05))?;
    let null = run_recovery(&recovery_config(1, 0.0))?;
    let summary = format!(
        "beta=-0.05: {} papers, slope {:.4} (se {:.4}), rho {:.3}, {:.1?}; beta=0: slope {:.4} = {:.2} se, {:.1?}",
        planted.papers,
        planted.slope,
        planted.se,
        planted.rho,
        planted.elapsed,
        null.slope,
        null.slope / null.se,
        null.elapsed
    );
    let fail = |why: &str| Err(format!("{why}; {summary}"));
    if planted.papers < 200_000 {
        return fail("corpus smaller than 200000 papers");
    }
    if !(planted.slope < 0.0 && (planted.slope + 0.05).abs() <= 0.01) {
        return fail("planted slope not recovered");
    }
    if planted.rho.is_nan() || planted.rho > -0.9 {
        return fail("binscatter not monotone");
    }
    if null.slope.is_nan() || null.se.is_nan() || null.slope.abs() > 3.0 * null.se {
        return fail("null slope beyond 3 se");
    }
    if planted.elapsed >= Duration::from_secs(60) || null.elapsed >= Duration::from_secs(60) {
        return fail("over 60 s");
    }
    Ok(summary)
}

// Field shares and trend

fn field_shares() -> Outcome {
    let start = Instant::now();
    let mut field_betas = vec![-0.08; 10];
    field_betas[6] = 0.08;
    let config = SynthConfig {
        seed: 4,
        n_authors: 20_300,
        n_venues: 200,
        n_fields: 10,
        field_betas,
        ..SynthConfig::default()
    };
    let synth = generate(&config).map_err(|e| e.to_string())?;
    let (corpus, _) = ingest_str(&synth.to_jsonl(), &IngestConfig::default());
    let frame = paper_frame(&corpus, &FrameOptions::default())
        .map_err(|e| e.to_string())?
        .frame;
    let table =
        field_slope_table(&frame, "field", "hit", "pivot", 100).map_err(|e| e.to_string())?;
    let share = table.negative_share();
    ensure(table.qualifying() == 10 && share == Some(0.9), || {
        format!(
            "qualifying {} negative {} share {share:?}",
            table.qualifying(),
            table.negative()
        )
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 240;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let year: Vec<f64> = (0..n).map(|i| 2010.0 + (i % 11) as f64).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&year)
        .map(|(x, yr)| 0.3 + 0.5 * x + 0.02 * (yr - 2010.0) - 0.1 * x * (yr - 2015.0))
        .collect();
    let mut f = AnalysisFrame::new("id", (0..n).map(|i| i.to_string()).collect());
    f.add_numeric("y", y.into_iter().map(Some).collect())
        .unwrap();
    f.add_numeric("x", x.into_iter().map(Some).collect())
        .unwrap();
    f.add_numeric("year", year.into_iter().map(Some).collect())
        .unwrap();
    let trend = slope_trend(&f, "y", "x", "year").map_err(|e| e.to_string())?;
    ensure((trend.interaction + 0.1).abs() <= 1e-6, || {
        format!("interaction {}", trend.interaction)
    })?;
    Ok(format!(
        "negative share {:.2} over {} fields; trend interaction {:.12}, {:.1?}",
        share.unwrap(),
        table.qualifying(),
        trend.interaction,
        start.elapsed()
    ))
}

// Determinism across thread counts

fn cli(threads: usize, args: &[String]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pivotscope"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let corpus = root.join("corpus.jsonl");
    let config = SynthConfig {
        seed: 21,
        n_authors: 400,
        n_venues: 24,
        n_fields: 4,
        ..SynthConfig::default()
    };
    fs::write(&corpus, generate(&config).unwrap().to_jsonl()).unwrap();
    let input = corpus.to_str().unwrap().to_string();
    let frame = root.join("frame.tsv");
    let relfreq = root.join("relfreq.tsv");
    let topic = ["--query-string", "pandemic"];
    let cmds: Vec<(&str, Vec<&str>)> = vec![
        ("ingest", vec![]),
        ("validate", vec![]),
        ("tag", vec!["--query-string", "pandemic OR covid"]),
        (
            "relfreq",
            [&topic[..], &["--min-topic-papers", "5"]].concat(),
        ),
        ("pivot", vec!["--window", "full-career"]),
        ("impact", vec!["--min-group", "10"]),
        ("proximity", topic.to_vec()),
        ("careers", vec![]),
        ("match", topic.to_vec()),
        ("collab", vec![]),
        ("binscatter", vec!["--bins", "20", "--fe", "field-year"]),
        (
            "regress",
            vec![
                "--fe",
                "field-year",
                "--by",
                "field",
                "--min-papers",
                "50",
                "--trend",
            ],
        ),
        ("synth", vec![]),
        ("report", topic.to_vec()),
    ];
    let mut checked = 0;
    for (name, extra) in &cmds {
        let mut reference: Option<BTreeMap<String, Vec<u8>>> = None;
        for threads in [1, 2, 8] {
            let out = root.join(format!("{name}-{threads}"));
            let mut args = vec![name.to_string()];
            if *name == "synth" {
                args.extend(
                    ["--seed", "3", "--n-authors", "300", "--n-venues", "16"].map(String::from),
                );
            } else {
                args.extend(["--input".into(), input.clone()]);
            }
            args.extend(extra.iter().map(|s| s.to_string()));
            if *name == "proximity" {
                args.extend(["--relfreq".into(), relfreq.to_str().unwrap().into()]);
            }
            args.extend(["--output-dir".into(), out.to_str().unwrap().into()]);
            cli(threads, &args)?;
            let files = dir_contents(&out);
            ensure(
                files.len() >= 2 && files.values().all(|b| !b.is_empty()),
                || format!("{name}: missing outputs"),
            )?;
            match &reference {
                None => reference = Some(files),
                Some(r) => {
                    for (f, bytes) in r {
                        ensure(files.get(f) == Some(bytes), || {
                            format!("{name}: {f} differs at {threads} threads")
                        })?;
                    }
                    checked += files.len();
                }
            }
        }
        if *name == "relfreq" {
            fs::copy(root.join("relfreq-1/relfreq.tsv"), &relfreq).unwrap();
        }
        if *name == "report" {
            fs::copy(root.join("report-1/frame.tsv"), &frame).unwrap();
        }
    }
    let frame_arg = frame.to_str().unwrap().to_string();
    for (name, extra) in [
        ("binscatter", vec!["--fe", "field-year"]),
        ("regress", vec!["--fe", "field-year", "--trend"]),
    ] {
        let mut reference = None;
        for threads in [1, 2, 8] {
            let out = root.join(format!("{name}-frame-{threads}"));
            let mut args: Vec<String> = vec![name.into(), "--frame".into(), frame_arg.clone()];
            args.extend(extra.iter().map(|s| s.to_string()));
            args.extend(["--output-dir".into(), out.to_str().unwrap().into()]);
            cli(threads, &args)?;
            let files = dir_contents(&out);
            match &reference {
                None => reference = Some(files),
                Some(r) => ensure(&files == r, || {
                    format!("{name} --frame differs at {threads} threads")
                })?,
            }
        }
    }
    Ok(format!(
        "{} subcommands x threads 1,2,8; {checked} files compared byte for byte",
        cmds.len()
    ))
}

// Matching

fn matching_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut pairs_checked = 0;
    for case in 0..300 {
        let n_pool = rng.random_range(0..=100);
        let n_treated = rng.random_range(1..=30);
        let mut profiles = BTreeMap::new();
        let mut make = |id: String, rng: &mut ChaCha8Rng| {
            let field = match rng.random_range(0..10) {
                0 => None,
                k => Some(format!("F{}", k % 3)),
            };
            let first = rng.random_range(2000..=2003);
            profiles.insert(
                id.clone(),
                CareerProfile {
                    author_id: id,
                    first_pub_year: first,
                    last_pub_year: 2020,
                    modal_l0_field: None,
                    modal_l1_field: field,
                    pub_count_window: rng.random_range(0..=12),
                    prior_impact: 0,
                },
            );
        };
        let pool: BTreeSet<String> = (0..n_pool).map(|i| format!("c{i:03}")).collect();
        let treated: BTreeSet<String> = (0..n_treated).map(|i| format!("t{i:03}")).collect();
        for id in &pool {
            make(id.clone(), &mut rng);
        }
        for id in &treated {
            if rng.random_range(0..20) > 0 {
                make(id.clone(), &mut rng);
            }
        }
        let got = match_controls(&treated, &pool, &profiles).map_err(|e| e.to_string())?;

        let mut used: BTreeSet<&str> = BTreeSet::new();
        let mut want_pairs = Vec::new();
        let mut want_unmatched = Vec::new();
        for t in &treated {
            let Some(tp) = profiles.get(t) else {
                want_unmatched.push((t.clone(), UnmatchedReason::MissingProfile));
                continue;
            };
            if tp.modal_l1_field.is_none() {
                want_unmatched.push((t.clone(), UnmatchedReason::NoPrimaryField));
                continue;
            }
            let best = pool
                .iter()
                .filter(|c| !used.contains(c.as_str()))
                .filter(|c| {
                    let cp = &profiles[*c];
                    cp.first_pub_year == tp.first_pub_year && cp.modal_l1_field == tp.modal_l1_field
                })
                .min_by_key(|c| {
                    (
                        profiles[*c].pub_count_window.abs_diff(tp.pub_count_window),
                        c.as_str(),
                    )
                });
            match best {
                Some(c) => {
                    used.insert(c);
                    want_pairs.push((
                        t.clone(),
                        c.clone(),
                        profiles[c].pub_count_window.abs_diff(tp.pub_count_window),
                    ));
                }
                None => want_unmatched.push((t.clone(), UnmatchedReason::NoCandidates)),
            }
        }
        let got_pairs: Vec<(String, String, usize)> = got
            .pairs
            .iter()
            .map(|p| (p.treated.clone(), p.control.clone(), p.distance))
            .collect();
        ensure(got_pairs == want_pairs, || {
            format!("case {case}: pairs differ from exhaustive search")
        })?;
        ensure(got.unmatched == want_unmatched, || {
            format!("case {case}: unmatched differ")
        })?;
        let controls: BTreeSet<&String> = got.pairs.iter().map(|p| &p.control).collect();
        ensure(controls.len() == got.pairs.len(), || {
            format!("case {case}: control reused")
        })?;
        for p in &got.pairs {
            let (a, b) = (&profiles[&p.treated], &profiles[&p.control]);
            ensure(pool.contains(&p.control), || {
                format!("case {case}: control outside pool")
            })?;
            ensure(
                a.first_pub_year == b.first_pub_year && a.modal_l1_field == b.modal_l1_field,
                || format!("case {case}: key mismatch"),
            )?;
        }
        pairs_checked += got.pairs.len();
    }
    Ok(format!(
        "300 random pools (<=100 authors), {pairs_checked} pairs equal exhaustive greedy search"
    ))
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("pivot oracle equivalence", pivot_oracle),
        ("pivot invariant suite", pivot_invariants),
        ("residualization equivalence", residualization),
        ("binscatter contract", binscatter_contract),
        ("relfreq hand-check", relfreq_contract),
        ("hit-rate contract", hit_contract),
        ("synthetic recovery", synthetic_recovery),
        ("per-field shares and slope trend", field_shares),
        ("determinism across thread counts", determinism),
        ("matching contract", matching_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", 10 - failed, 10);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
