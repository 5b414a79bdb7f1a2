use std::collections::HashMap;

use pivotscope::corpus::{ingest_str, Corpus};
use pivotscope::pivot::{pivot_table, PivotSelection, PivotWindow};
use pivotscope::synth::{generate, GroundTruth, SynthConfig};
use pivotscope::IngestConfig;

fn small(seed: u64, home_mix: [f64; 2]) -> SynthConfig {
    SynthConfig {
        seed,
        n_authors: 200,
        n_venues: 18,
        n_fields: 3,
        home_mix,
        ..SynthConfig::default()
    }
}

fn build(config: &SynthConfig) -> (Corpus, GroundTruth) {
    let synth = generate(config).unwrap();
    let (corpus, report) = ingest_str(&synth.to_jsonl(), &IngestConfig::default());
    assert_eq!(report.dropped_total(), 0);
    (corpus, synth.truth)
}

fn measured_pivots(corpus: &Corpus) -> HashMap<String, f64> {
    pivot_table(corpus, PivotWindow::ThreeYear, &PivotSelection::default())
        .paper_values()
        .into_iter()
        .map(|(p, v)| (corpus.paper(p).paper_id.clone(), v))
        .collect()
}

fn mean_pivot(config: &SynthConfig) -> f64 {
    let (corpus, _) = build(config);
    let values: Vec<f64> = measured_pivots(&corpus).into_values().collect();
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn recorded_pivots_equal_measured_pivots() {
    for seed in [1, 2] {
        let (corpus, truth) = build(&small(seed, [0.0, 1.0]));
        let measured = measured_pivots(&corpus);
        let mut defined = 0;
        for p in &truth.papers {
            match (p.phi, measured.get(&p.paper_id)) {
                (Some(a), Some(b)) => {
                    defined += 1;
                    assert!((a - b).abs() <= 1e-12, "{}: {a} vs {b}", p.paper_id);
                }
                (None, None) => {}
                (a, b) => panic!("{}: recorded {a:?}, measured {b:?}", p.paper_id),
            }
        }
        assert!(defined > truth.papers.len() / 2);
    }
}

#[test]
fn pure_home_mix_gives_small_pivots() {
    let home = mean_pivot(&small(3, [1.0, 1.0]));
    let fresh = mean_pivot(&small(3, [0.0, 0.0]));
    assert!(home < 0.1, "home-only mean pivot {home}");
    assert!(
        fresh > 0.3 && fresh > 4.0 * home,
        "fresh-only mean pivot {fresh}, home-only {home}"
    );
}

#[test]
fn pivots_grow_as_home_share_falls() {
    for seed in 0..10 {
        let means: Vec<f64> = [[0.9, 1.0], [0.5, 0.6], [0.1, 0.2]]
            .iter()
            .map(|&mix| mean_pivot(&small(seed, mix)))
            .collect();
        assert!(
            means.windows(2).all(|w| w[0] < w[1]),
            "seed {seed}: means {means:?}"
        );
    }
}

#[test]
fn topic_papers_pivot_further() {
    let (mut topic, mut other) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let config = SynthConfig {
            topic_base: 0.1,
            ..small(seed, [0.0, 1.0])
        };
        let (_, truth) = build(&config);
        for p in truth.papers.iter().filter(|p| p.year == config.last_year) {
            if let Some(phi) = p.phi {
                if p.topic {
                    topic.push(phi)
                } else {
                    other.push(phi)
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(topic.len() > 50);
    assert!(
        mean(&topic) > mean(&other) + 0.05,
        "{} vs {}",
        mean(&topic),
        mean(&other)
    );
}
