//! Per-paper analysis frames assembled from the measurement modules, and the
//! composed report run.

use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;

use crate::corpus::{Corpus, FieldYearKey, PaperIdx};
use crate::error::{Error, Result};
use crate::metrics::{
    hit_flags, journal_placement, HitParams, HitTable, JournalPlacement, PlacementParams,
};
use crate::par;
use crate::pivot::{pivot_table, PivotSelection, PivotTable, PivotWindow};
use crate::stats::{
    ols_within, residualized_binscatter, AnalysisFrame, BinTable, FeOptions, OlsFit,
};

/// Column names of the paper frame.
pub mod col {
    pub const YEAR: &str = "year";
    pub const FIELD: &str = "field";
    pub const FIELD_YEAR: &str = "field_year";
    pub const PIVOT: &str = "pivot";
    pub const HIT: &str = "hit";
    pub const CITATIONS: &str = "citations";
    pub const PLACEMENT: &str = "placement";
    pub const TEAM_SIZE: &str = "team_size";
    pub const NEW_COLLABORATIONS: &str = "new_collaborations";
    pub const FUNDED: &str = "funded";
    pub const TOPIC: &str = "topic";
    pub const PRIOR_IMPACT_GROUP: &str = "prior_impact_group";
    pub const AGE_GROUP: &str = "age_group";
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOptions {
    pub window: PivotWindow,
    pub hit: HitParams,
    /// Citations dated after this are ignored; defaults to the latest date
    /// in the corpus.
    pub horizon: Option<NaiveDate>,
    pub placement: PlacementParams,
    /// Paper IDs marked in the `topic` column; the column is omitted when
    /// `None`.
    pub topic: Option<BTreeSet<String>>,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            window: PivotWindow::ThreeYear,
            hit: HitParams::default(),
            horizon: None,
            placement: PlacementParams::default(),
            topic: None,
        }
    }
}

/// Everything computed while building a frame, kept for writing tables.
#[derive(Debug, Clone)]
pub struct PaperAnalysis {
    pub pivots: PivotTable,
    pub hits: HitTable,
    pub placement: JournalPlacement,
    pub frame: AnalysisFrame,
}

fn horizon_of(corpus: &Corpus, given: Option<NaiveDate>) -> Result<NaiveDate> {
    given
        .or_else(|| corpus.max_date())
        .ok_or_else(|| Error::InvalidArgument("corpus is empty".into()))
}

/// Papers in career order: by publication date, then paper ID.
fn dated_order(corpus: &Corpus) -> Vec<PaperIdx> {
    let mut order: Vec<PaperIdx> = (0..corpus.len() as PaperIdx).collect();
    order.sort_by_key(|&p| corpus.paper(p).pub_date.date);
    order
}

/// Coauthor pairs on each paper that have not appeared together on an
/// earlier paper.
pub fn new_collaborations(corpus: &Corpus) -> Vec<usize> {
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut out = vec![0; corpus.len()];
    for p in dated_order(corpus) {
        let authors = corpus.paper_authors(p);
        let mut fresh = 0;
        for (i, &a) in authors.iter().enumerate() {
            for &b in &authors[i + 1..] {
                let key = if a < b { (a, b) } else { (b, a) };
                if seen.insert(key) {
                    fresh += 1;
                }
            }
        }
        out[p as usize] = fresh;
    }
    out
}

/// Log2 bucket label for a nonnegative count-like value.
fn log_bucket(x: f64) -> String {
    let v = x.max(0.0).floor() as u64;
    let b = (v + 1).ilog2();
    if b == 0 {
        "0".to_string()
    } else {
        format!("{}-{}", (1u64 << b) - 1, (1u64 << (b + 1)) - 2)
    }
}

fn age_bucket(age: f64) -> &'static str {
    match age {
        a if a < 5.0 => "0-4",
        a if a < 10.0 => "5-9",
        a if a < 20.0 => "10-19",
        _ => "20+",
    }
}

/// Mean over the paper's authors of career age (years since first
/// publication) and of citations received before the paper's year to their
/// earlier papers.
fn author_context(corpus: &Corpus) -> Vec<Option<(f64, f64)>> {
    par::map_range(corpus.len(), |i| {
        let p = i as PaperIdx;
        let authors = corpus.paper_authors(p);
        if authors.is_empty() {
            return None;
        }
        let year = corpus.year(p);
        let mut age = 0.0;
        let mut impact = 0.0;
        for &a in authors {
            let papers = corpus.author_papers(a);
            age += (year - corpus.year(papers[0])) as f64;
            let mut cites = 0usize;
            for &q in papers.iter().take_while(|&&q| corpus.year(q) < year) {
                cites += corpus
                    .cited_by(q)
                    .iter()
                    .filter(|&&c| corpus.year(c) < year)
                    .count();
            }
            impact += cites as f64;
        }
        let n = authors.len() as f64;
        Some((age / n, impact / n))
    })
}

/// Builds the per-paper frame: pivot size, hit flag, citation count, venue
/// placement, team size, new collaborations, funding, optional topic flag,
/// and the grouping columns used as fixed effects.
pub fn paper_frame(corpus: &Corpus, opts: &FrameOptions) -> Result<PaperAnalysis> {
    let horizon = horizon_of(corpus, opts.horizon)?;
    let pivots = pivot_table(corpus, opts.window, &PivotSelection::default());
    let hits = hit_flags(corpus, horizon, opts.hit);
    let placement = journal_placement(corpus, &hits, &opts.placement);
    let pivot_values = pivots.paper_values();
    let collabs = new_collaborations(corpus);
    let context = author_context(corpus);

    let n = corpus.len();
    let ids = corpus.papers().iter().map(|r| r.paper_id.clone()).collect();
    let mut frame = AnalysisFrame::new("paper_id", ids);
    let idx = || 0..n as PaperIdx;
    let keys: Vec<FieldYearKey> = corpus.papers().iter().map(FieldYearKey::of).collect();
    frame.add_numeric(
        col::YEAR,
        idx().map(|p| Some(corpus.year(p) as f64)).collect(),
    )?;
    frame.add_factor(
        col::FIELD,
        keys.iter().map(|k| Some(k.field_label())).collect(),
    )?;
    frame.add_factor(
        col::FIELD_YEAR,
        keys.iter().map(|k| Some(k.to_string())).collect(),
    )?;
    frame.add_numeric(
        col::PIVOT,
        idx().map(|p| pivot_values.get(&p).copied()).collect(),
    )?;
    frame.add_numeric(
        col::HIT,
        idx()
            .map(|p| hits.entry(p).hit().map(|h| h as u8 as f64))
            .collect(),
    )?;
    frame.add_numeric(
        col::CITATIONS,
        idx()
            .map(|p| Some(corpus.citation_count_idx(p, horizon) as f64))
            .collect(),
    )?;
    frame.add_numeric(
        col::PLACEMENT,
        idx()
            .map(|p| corpus.venue_of(p).and_then(|v| placement.score(v)))
            .collect(),
    )?;
    frame.add_numeric(
        col::TEAM_SIZE,
        idx()
            .map(|p| Some(corpus.paper_authors(p).len() as f64))
            .collect(),
    )?;
    frame.add_numeric(
        col::NEW_COLLABORATIONS,
        collabs.iter().map(|&c| Some(c as f64)).collect(),
    )?;
    frame.add_numeric(
        col::FUNDED,
        corpus
            .papers()
            .iter()
            .map(|r| Some(if r.grant_ids.is_empty() { 0.0 } else { 1.0 }))
            .collect(),
    )?;
    if let Some(topic) = &opts.topic {
        frame.add_numeric(
            col::TOPIC,
            corpus
                .papers()
                .iter()
                .map(|r| {
                    Some(if topic.contains(&r.paper_id) {
                        1.0
                    } else {
                        0.0
                    })
                })
                .collect(),
        )?;
    }
    frame.add_factor(
        col::PRIOR_IMPACT_GROUP,
        context
            .iter()
            .map(|c| c.map(|(_, i)| log_bucket(i)))
            .collect(),
    )?;
    frame.add_factor(
        col::AGE_GROUP,
        context
            .iter()
            .map(|c| c.map(|(a, _)| age_bucket(a).to_string()))
            .collect(),
    )?;
    Ok(PaperAnalysis {
        pivots,
        hits,
        placement,
        frame,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub frame: FrameOptions,
    pub impact: String,
    pub factors: Vec<String>,
    pub bins: usize,
    pub fe: FeOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            frame: FrameOptions::default(),
            impact: col::HIT.to_string(),
            factors: vec![col::FIELD_YEAR.to_string()],
            bins: 20,
            fe: FeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub analysis: PaperAnalysis,
    pub bins: BinTable,
    /// Within-fixed-effect slope of impact on pivot size.
    pub slope: OlsFit,
}

/// Pivot sizes, impact flags, then the residualized binscatter and slope of
/// impact on pivot size.
pub fn report(corpus: &Corpus, opts: &ReportOptions) -> Result<Report> {
    let analysis = paper_frame(corpus, &opts.frame)?;
    let factors: Vec<&str> = opts.factors.iter().map(String::as_str).collect();
    let bins = residualized_binscatter(
        &analysis.frame,
        col::PIVOT,
        &opts.impact,
        &factors,
        opts.bins,
        opts.fe,
    )?;
    let slope = ols_within(&analysis.frame, &opts.impact, col::PIVOT, &factors, opts.fe)?;
    Ok(Report {
        analysis,
        bins,
        slope,
    })
}
