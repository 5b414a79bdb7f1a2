//! Impact and proximity measures: field-year citation hits, journal
//! placement, and citations from a topic corpus to an author's earlier work.

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;

pub use crate::corpus::FieldYearKey;
use crate::corpus::{AuthorIdx, Corpus, PaperIdx, VenueIdx};
use crate::error::Result;
use crate::par;
use crate::table::{num, opt_num, TsvWriter};
use crate::tagger::YearRange;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitParams {
    /// Quantile defining a hit.
    pub p: f64,
    /// Groups smaller than this are left undefined.
    pub min_group: usize,
}

impl Default for HitParams {
    fn default() -> Self {
        Self {
            p: 0.95,
            min_group: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitEntry {
    Defined {
        hit: bool,
        threshold: usize,
        group_size: usize,
    },
    SmallGroup {
        group_size: usize,
    },
}

impl HitEntry {
    pub fn hit(&self) -> Option<bool> {
        match self {
            HitEntry::Defined { hit, .. } => Some(*hit),
            HitEntry::SmallGroup { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDiagnostics {
    pub key: FieldYearKey,
    pub size: usize,
    pub threshold: Option<usize>,
    pub flagged: usize,
    /// Papers a tie-free group of this size would flag.
    pub nominal: usize,
    /// `flagged - nominal`: extra hits caused by ties at the threshold.
    pub tie_inflation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitTable {
    pub horizon: NaiveDate,
    pub params: HitParams,
    entries: Vec<HitEntry>,
    pub groups: Vec<GroupDiagnostics>,
}

/// 0-based rank of the threshold in an ascending sort: `floor(p * n)`,
/// capped at the last element. Flagging `count >= sorted[rank]` marks the
/// top `n - floor(p * n)` papers when counts are distinct.
pub fn threshold_rank(p: f64, n: usize) -> usize {
    let r = (p * n as f64 + 1e-9).floor() as usize;
    r.min(n.saturating_sub(1))
}

/// Nearest-rank threshold over citation counts.
pub fn hit_threshold(counts: &[usize], p: f64) -> Option<usize> {
    if counts.is_empty() {
        return None;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    Some(sorted[threshold_rank(p, sorted.len())])
}

/// Flags papers at or above the field-year citation threshold, counting
/// citations received up to `horizon`.
pub fn hit_flags(corpus: &Corpus, horizon: NaiveDate, params: HitParams) -> HitTable {
    let groups: Vec<(&FieldYearKey, &Vec<PaperIdx>)> = corpus.field_year_groups().iter().collect();
    let results: Vec<(GroupDiagnostics, Vec<(PaperIdx, HitEntry)>)> =
        par::map(&groups, |(key, members)| {
            let size = members.len();
            if size < params.min_group {
                let entries = members
                    .iter()
                    .map(|&p| (p, HitEntry::SmallGroup { group_size: size }))
                    .collect();
                let diag = GroupDiagnostics {
                    key: (*key).clone(),
                    size,
                    threshold: None,
                    flagged: 0,
                    nominal: 0,
                    tie_inflation: 0,
                };
                return (diag, entries);
            }
            let counts: Vec<usize> = members
                .iter()
                .map(|&p| corpus.citation_count_idx(p, horizon))
                .collect();
            let t = hit_threshold(&counts, params.p).expect("group is nonempty");
            let entries: Vec<(PaperIdx, HitEntry)> = members
                .iter()
                .zip(&counts)
                .map(|(&p, &c)| {
                    (
                        p,
                        HitEntry::Defined {
                            hit: c >= t,
                            threshold: t,
                            group_size: size,
                        },
                    )
                })
                .collect();
            let flagged = counts.iter().filter(|&&c| c >= t).count();
            let nominal = size - threshold_rank(params.p, size);
            let diag = GroupDiagnostics {
                key: (*key).clone(),
                size,
                threshold: Some(t),
                flagged,
                nominal,
                tie_inflation: flagged.saturating_sub(nominal),
            };
            (diag, entries)
        });

    let mut entries = vec![HitEntry::SmallGroup { group_size: 0 }; corpus.len()];
    let mut diags = Vec::with_capacity(results.len());
    for (diag, list) in results {
        for (p, e) in list {
            entries[p as usize] = e;
        }
        diags.push(diag);
    }
    HitTable {
        horizon,
        params,
        entries,
        groups: diags,
    }
}

impl HitTable {
    pub fn entry(&self, paper: PaperIdx) -> HitEntry {
        self.entries[paper as usize]
    }

    pub fn get(&self, corpus: &Corpus, paper_id: &str) -> Result<HitEntry> {
        Ok(self.entry(corpus.paper_idx(paper_id)?))
    }

    pub fn to_tsv(&self, corpus: &Corpus) -> String {
        let mut w = TsvWriter::new(&["paper_id", "group", "hit", "threshold", "group_size"]);
        for (i, e) in self.entries.iter().enumerate() {
            let p = i as PaperIdx;
            let group = FieldYearKey::of(corpus.paper(p)).to_string();
            let id = corpus.paper(p).paper_id.clone();
            match *e {
                HitEntry::Defined {
                    hit,
                    threshold,
                    group_size,
                } => w.row([
                    id,
                    group,
                    (hit as u8).to_string(),
                    threshold.to_string(),
                    group_size.to_string(),
                ]),
                HitEntry::SmallGroup { group_size } => w.row([
                    id,
                    group,
                    String::new(),
                    String::new(),
                    group_size.to_string(),
                ]),
            }
        }
        w.finish()
    }

    pub fn groups_tsv(&self) -> String {
        let mut w = TsvWriter::new(&[
            "group",
            "size",
            "threshold",
            "flagged",
            "nominal",
            "tie_inflation",
        ]);
        for g in &self.groups {
            w.row([
                g.key.to_string(),
                g.size.to_string(),
                g.threshold.map(|t| t.to_string()).unwrap_or_default(),
                g.flagged.to_string(),
                g.nominal.to_string(),
                g.tie_inflation.to_string(),
            ]);
        }
        w.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementParams {
    pub years: YearRange,
    pub min_year_papers: usize,
    /// Pool all qualifying papers instead of averaging yearly shares.
    pub pooled: bool,
}

impl Default for PlacementParams {
    fn default() -> Self {
        Self {
            years: YearRange::new(2000, 2019),
            min_year_papers: 10,
            pooled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VenuePlacement {
    pub venue: VenueIdx,
    pub score: Option<f64>,
    /// (year, papers with a defined hit flag, hits) for every covered year.
    pub years: Vec<(i32, usize, usize)>,
}

impl VenuePlacement {
    pub fn qualifying_years(&self, min_year_papers: usize) -> usize {
        self.years
            .iter()
            .filter(|(_, n, _)| *n >= min_year_papers)
            .count()
    }
}

fn venue_placement(
    corpus: &Corpus,
    hits: &HitTable,
    v: VenueIdx,
    params: &PlacementParams,
) -> VenuePlacement {
    let mut per_year: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for &p in corpus.venue_papers(v) {
        let y = corpus.year(p);
        if !params.years.contains(y) {
            continue;
        }
        if let Some(h) = hits.entry(p).hit() {
            let e = per_year.entry(y).or_default();
            e.0 += 1;
            e.1 += h as usize;
        }
    }
    let qualifying: Vec<(usize, usize)> = per_year
        .values()
        .copied()
        .filter(|(n, _)| *n >= params.min_year_papers)
        .collect();
    let score = if qualifying.is_empty() {
        None
    } else if params.pooled {
        let n: usize = qualifying.iter().map(|q| q.0).sum();
        let h: usize = qualifying.iter().map(|q| q.1).sum();
        Some(h as f64 / n as f64)
    } else {
        let shares: f64 = qualifying.iter().map(|(n, h)| *h as f64 / *n as f64).sum();
        Some(shares / qualifying.len() as f64)
    };
    VenuePlacement {
        venue: v,
        score,
        years: per_year.into_iter().map(|(y, (n, h))| (y, n, h)).collect(),
    }
}

/// Historical hit share of a venue: by default the unweighted mean of
/// yearly shares over years with at least `min_year_papers` flagged papers.
pub fn journal_hit_rate(
    corpus: &Corpus,
    hits: &HitTable,
    venue_id: &str,
    params: &PlacementParams,
) -> Result<Option<f64>> {
    let v = corpus.venue_idx(venue_id)?;
    Ok(venue_placement(corpus, hits, v, params).score)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JournalPlacement {
    pub params: PlacementParams,
    pub venues: Vec<VenuePlacement>,
}

pub fn journal_placement(
    corpus: &Corpus,
    hits: &HitTable,
    params: &PlacementParams,
) -> JournalPlacement {
    let venues = par::map_range(corpus.n_venues(), |v| {
        venue_placement(corpus, hits, v as VenueIdx, params)
    });
    JournalPlacement {
        params: params.clone(),
        venues,
    }
}

impl JournalPlacement {
    pub fn score(&self, v: VenueIdx) -> Option<f64> {
        self.venues[v as usize].score
    }

    pub fn to_tsv(&self, corpus: &Corpus) -> String {
        let mut w = TsvWriter::new(&[
            "venue_id",
            "placement",
            "qualifying_years",
            "papers",
            "hits",
        ]);
        for vp in &self.venues {
            let n: usize = vp.years.iter().map(|y| y.1).sum();
            let h: usize = vp.years.iter().map(|y| y.2).sum();
            w.row([
                corpus.venue_id(vp.venue).to_string(),
                opt_num(vp.score),
                vp.qualifying_years(self.params.min_year_papers).to_string(),
                n.to_string(),
                h.to_string(),
            ]);
        }
        w.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProximityMode {
    TotalCitations,
    DistinctPapers,
}

/// Both proximity counts for one author.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Proximity {
    pub total_citations: usize,
    pub distinct_papers: usize,
}

impl Proximity {
    pub fn get(&self, mode: ProximityMode) -> usize {
        match mode {
            ProximityMode::TotalCitations => self.total_citations,
            ProximityMode::DistinctPapers => self.distinct_papers,
        }
    }
}

/// True when the two papers share at least one author.
pub fn shares_author(corpus: &Corpus, a: PaperIdx, b: PaperIdx) -> bool {
    let (x, y) = (corpus.paper_authors(a), corpus.paper_authors(b));
    x.iter().any(|id| y.contains(id))
}

fn proximity_idx(
    corpus: &Corpus,
    author: AuthorIdx,
    topic: &HashSet<PaperIdx>,
    cutoff_year: i32,
) -> Proximity {
    let mut out = Proximity::default();
    for &p in corpus.author_papers(author) {
        if corpus.year(p) >= cutoff_year {
            break;
        }
        let edges = corpus
            .cited_by(p)
            .iter()
            .filter(|c| topic.contains(c) && !shares_author(corpus, **c, p))
            .count();
        out.total_citations += edges;
        out.distinct_papers += (edges > 0) as usize;
    }
    out
}

pub fn resolve_topic(
    corpus: &Corpus,
    topic: &std::collections::BTreeSet<String>,
) -> Result<HashSet<PaperIdx>> {
    topic.iter().map(|id| corpus.paper_idx(id)).collect()
}

/// Non-self citations from topic papers to the author's papers published
/// before `cutoff_year`.
pub fn citation_proximity(
    corpus: &Corpus,
    author_id: &str,
    topic: &HashSet<PaperIdx>,
    cutoff_year: i32,
    mode: ProximityMode,
) -> Result<usize> {
    let a = corpus.author_idx(author_id)?;
    Ok(proximity_idx(corpus, a, topic, cutoff_year).get(mode))
}

pub fn proximity_table(
    corpus: &Corpus,
    authors: &[AuthorIdx],
    topic: &HashSet<PaperIdx>,
    cutoff_year: i32,
) -> Vec<(AuthorIdx, Proximity)> {
    par::map(authors, |&a| {
        (a, proximity_idx(corpus, a, topic, cutoff_year))
    })
}

pub fn proximity_tsv(
    corpus: &Corpus,
    rows: &[(AuthorIdx, Proximity)],
    title_scores: Option<&[Option<f64>]>,
) -> String {
    let mut w = TsvWriter::new(&[
        "author_id",
        "total_citations",
        "distinct_papers",
        "title_score",
    ]);
    for (i, (a, p)) in rows.iter().enumerate() {
        let title = title_scores.and_then(|s| s[i]).map(num).unwrap_or_default();
        w.row([
            corpus.author_id(*a).to_string(),
            p.total_citations.to_string(),
            p.distinct_papers.to_string(),
            title,
        ]);
    }
    w.finish()
}
