//! Pivot size: one minus the cosine between the venue distribution of a
//! focal paper's references and that of the author's earlier work.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::corpus::{AuthorIdx, Corpus, PaperIdx, VenueIdx};
use crate::error::{Error, Result};
use crate::par;
use crate::table::{num, TsvWriter};
use crate::tagger::YearRange;

/// Sparse nonnegative weights over venues, sorted by venue index. Zero
/// weights are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct VenueVector {
    entries: Vec<(VenueIdx, f64)>,
    norm: f64,
}

impl VenueVector {
    /// Sums duplicate venues; rejects negative or non-finite weights.
    pub fn from_weights<I: IntoIterator<Item = (VenueIdx, f64)>>(weights: I) -> Result<Self> {
        let mut raw: Vec<(VenueIdx, f64)> = weights.into_iter().collect();
        if let Some((v, w)) = raw.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "venue {v} has invalid weight {w}"
            )));
        }
        raw.sort_by_key(|(v, _)| *v);
        let mut entries: Vec<(VenueIdx, f64)> = Vec::with_capacity(raw.len());
        for (v, w) in raw {
            match entries.last_mut() {
                Some((last, acc)) if *last == v => *acc += w,
                _ => entries.push((v, w)),
            }
        }
        entries.retain(|(_, w)| *w > 0.0);
        Ok(Self::from_sorted(entries))
    }

    /// One unit of weight per occurrence.
    pub fn from_occurrences(mut venues: Vec<VenueIdx>) -> Self {
        venues.sort_unstable();
        let mut entries: Vec<(VenueIdx, f64)> = Vec::new();
        for v in venues {
            match entries.last_mut() {
                Some((last, acc)) if *last == v => *acc += 1.0,
                _ => entries.push((v, 1.0)),
            }
        }
        Self::from_sorted(entries)
    }

    fn from_sorted(entries: Vec<(VenueIdx, f64)>) -> Self {
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        Self { entries, norm }
    }

    pub fn entries(&self) -> &[(VenueIdx, f64)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: VenueIdx) -> f64 {
        self.entries
            .binary_search_by_key(&v, |(k, _)| *k)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, other: &VenueVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// `1 - cos(a, b)`, clamped into [0, 1]. Both vectors must be nonempty.
pub fn pivot_between(focal: &VenueVector, prior: &VenueVector) -> f64 {
    debug_assert!(!focal.is_empty() && !prior.is_empty());
    let cos = focal.dot(prior) / (focal.norm() * prior.norm());
    (1.0 - cos).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PivotWindow {
    /// Papers from the three calendar years before the focal year.
    ThreeYear,
    /// Every paper from earlier calendar years.
    FullCareer,
}

impl PivotWindow {
    pub fn label(self) -> &'static str {
        match self {
            PivotWindow::ThreeYear => "three-year",
            PivotWindow::FullCareer => "full-career",
        }
    }

    pub fn admits(self, focal_year: i32, year: i32) -> bool {
        match self {
            PivotWindow::ThreeYear => (focal_year - 3..focal_year).contains(&year),
            PivotWindow::FullCareer => year < focal_year,
        }
    }
}

impl fmt::Display for PivotWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PivotWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three-year" => Ok(PivotWindow::ThreeYear),
            "full-career" => Ok(PivotWindow::FullCareer),
            _ => Err(Error::InvalidArgument(format!(
                "unknown window {s:?} (expected three-year or full-career)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UndefinedReason {
    NoPriorPapers,
    NoResolvableVenuesFocal,
    NoResolvableVenuesPrior,
    NoDefinedAuthors,
}

impl UndefinedReason {
    pub fn code(self) -> &'static str {
        match self {
            UndefinedReason::NoPriorPapers => "no-prior-papers",
            UndefinedReason::NoResolvableVenuesFocal => "no-resolvable-venues-focal",
            UndefinedReason::NoResolvableVenuesPrior => "no-resolvable-venues-prior",
            UndefinedReason::NoDefinedAuthors => "no-defined-authors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PivotResult {
    Defined(f64),
    Undefined(UndefinedReason),
}

impl PivotResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            PivotResult::Defined(v) => Some(*v),
            PivotResult::Undefined(_) => None,
        }
    }

    pub fn reason(&self) -> Option<UndefinedReason> {
        match self {
            PivotResult::Defined(_) => None,
            PivotResult::Undefined(r) => Some(*r),
        }
    }
}

fn reference_venues(corpus: &Corpus, paper: PaperIdx, out: &mut Vec<VenueIdx>) {
    out.extend(
        corpus
            .references(paper)
            .iter()
            .filter_map(|&t| corpus.venue_of(t)),
    );
}

fn focal_vector_idx(corpus: &Corpus, paper: PaperIdx) -> Option<VenueVector> {
    let mut venues = Vec::new();
    reference_venues(corpus, paper, &mut venues);
    if venues.is_empty() {
        None
    } else {
        Some(VenueVector::from_occurrences(venues))
    }
}

/// Venue counts over the paper's references whose target has a venue.
/// `None` when no reference resolves.
pub fn focal_vector(corpus: &Corpus, paper_id: &str) -> Result<Option<VenueVector>> {
    let idx = corpus.paper_idx(paper_id)?;
    Ok(focal_vector_idx(corpus, idx))
}

fn prior_vector_idx(
    corpus: &Corpus,
    author: AuthorIdx,
    focal_year: i32,
    window: PivotWindow,
) -> std::result::Result<VenueVector, UndefinedReason> {
    let mut any = false;
    let mut venues = Vec::new();
    for &p in corpus.author_papers(author) {
        let y = corpus.year(p);
        if y >= focal_year {
            break;
        }
        if window.admits(focal_year, y) {
            any = true;
            reference_venues(corpus, p, &mut venues);
        }
    }
    if !any {
        Err(UndefinedReason::NoPriorPapers)
    } else if venues.is_empty() {
        Err(UndefinedReason::NoResolvableVenuesPrior)
    } else {
        Ok(VenueVector::from_occurrences(venues))
    }
}

fn author_on_paper(
    corpus: &Corpus,
    author_id: &str,
    paper_id: &str,
) -> Result<(AuthorIdx, PaperIdx)> {
    let p = corpus.paper_idx(paper_id)?;
    let not_on = || Error::AuthorNotOnPaper {
        author: author_id.to_string(),
        paper: paper_id.to_string(),
    };
    let a = corpus.author_idx(author_id).map_err(|_| not_on())?;
    if !corpus.paper_authors(p).contains(&a) {
        return Err(not_on());
    }
    Ok((a, p))
}

/// Summed venue counts over the author's papers inside the window before
/// the focal paper's year. The focal paper itself never qualifies.
pub fn prior_vector(
    corpus: &Corpus,
    author_id: &str,
    focal_paper_id: &str,
    window: PivotWindow,
) -> Result<std::result::Result<VenueVector, UndefinedReason>> {
    let (a, p) = author_on_paper(corpus, author_id, focal_paper_id)?;
    Ok(prior_vector_idx(corpus, a, corpus.year(p), window))
}

fn combine(
    focal: Option<&VenueVector>,
    prior: std::result::Result<&VenueVector, UndefinedReason>,
) -> PivotResult {
    match (prior, focal) {
        (Err(UndefinedReason::NoPriorPapers), _) => {
            PivotResult::Undefined(UndefinedReason::NoPriorPapers)
        }
        (_, None) => PivotResult::Undefined(UndefinedReason::NoResolvableVenuesFocal),
        (Err(r), Some(_)) => PivotResult::Undefined(r),
        (Ok(prior), Some(focal)) => PivotResult::Defined(pivot_between(focal, prior)),
    }
}

pub fn pivot_size(
    corpus: &Corpus,
    author_id: &str,
    paper_id: &str,
    window: PivotWindow,
) -> Result<PivotResult> {
    let (a, p) = author_on_paper(corpus, author_id, paper_id)?;
    let prior = prior_vector_idx(corpus, a, corpus.year(p), window);
    let focal = focal_vector_idx(corpus, p);
    Ok(combine(focal.as_ref(), prior.as_ref().map_err(|r| *r)))
}

fn mean_of_defined(results: impl Iterator<Item = PivotResult>) -> (PivotResult, usize) {
    let defined: Vec<f64> = results.filter_map(|r| r.value()).collect();
    if defined.is_empty() {
        (PivotResult::Undefined(UndefinedReason::NoDefinedAuthors), 0)
    } else {
        let mean = defined.iter().sum::<f64>() / defined.len() as f64;
        (PivotResult::Defined(mean), defined.len())
    }
}

/// Unweighted mean of the defined author-level pivots on a paper.
pub fn paper_pivot(corpus: &Corpus, paper_id: &str, window: PivotWindow) -> Result<PivotResult> {
    let p = corpus.paper_idx(paper_id)?;
    let focal = focal_vector_idx(corpus, p);
    let year = corpus.year(p);
    let results = corpus.paper_authors(p).iter().map(|&a| {
        let prior = prior_vector_idx(corpus, a, year, window);
        combine(focal.as_ref(), prior.as_ref().map_err(|r| *r))
    });
    Ok(mean_of_defined(results).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthorPivotRow {
    pub author: AuthorIdx,
    pub paper: PaperIdx,
    pub result: PivotResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperPivotRow {
    pub paper: PaperIdx,
    pub result: PivotResult,
    pub defined_authors: usize,
    pub authors: usize,
}

/// Author-paper and paper-level pivots for every paper in the selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotTable {
    pub window: PivotWindow,
    /// Sorted by (author_id, paper_id).
    pub author_rows: Vec<AuthorPivotRow>,
    /// Sorted by paper_id.
    pub paper_rows: Vec<PaperPivotRow>,
}

#[derive(Debug, Clone, Default)]
pub struct PivotSelection {
    pub years: Option<YearRange>,
    pub authors: Option<BTreeSet<String>>,
}

/// Computes pivots for all (author, paper) pairs in the selection. Work is
/// split per author; each author's prior vectors are built once per focal
/// year.
pub fn pivot_table(corpus: &Corpus, window: PivotWindow, selection: &PivotSelection) -> PivotTable {
    let in_years = |p: PaperIdx| selection.years.is_none_or(|r| r.contains(corpus.year(p)));
    let focal: Vec<Option<VenueVector>> = par::map_range(corpus.len(), |i| {
        let p = i as PaperIdx;
        if in_years(p) && !corpus.paper_authors(p).is_empty() {
            focal_vector_idx(corpus, p)
        } else {
            None
        }
    });

    let authors: Vec<AuthorIdx> = (0..corpus.n_authors() as AuthorIdx)
        .filter(|&a| {
            selection
                .authors
                .as_ref()
                .is_none_or(|s| s.contains(corpus.author_id(a)))
        })
        .collect();

    let per_author: Vec<Vec<AuthorPivotRow>> = par::map(&authors, |&a| {
        let mut priors: HashMap<i32, std::result::Result<VenueVector, UndefinedReason>> =
            HashMap::new();
        let mut rows = Vec::new();
        let mut papers: Vec<PaperIdx> = corpus
            .author_papers(a)
            .iter()
            .copied()
            .filter(|&p| in_years(p))
            .collect();
        papers.sort_by(|&x, &y| corpus.paper(x).paper_id.cmp(&corpus.paper(y).paper_id));
        for p in papers {
            let year = corpus.year(p);
            let prior = priors
                .entry(year)
                .or_insert_with(|| prior_vector_idx(corpus, a, year, window));
            let result = combine(focal[p as usize].as_ref(), prior.as_ref().map_err(|r| *r));
            rows.push(AuthorPivotRow {
                author: a,
                paper: p,
                result,
            });
        }
        rows
    });
    let author_rows: Vec<AuthorPivotRow> = per_author.into_iter().flatten().collect();

    let mut by_paper: Vec<Vec<PivotResult>> = vec![Vec::new(); corpus.len()];
    for row in &author_rows {
        by_paper[row.paper as usize].push(row.result);
    }
    let paper_rows = (0..corpus.len() as PaperIdx)
        .filter(|&p| in_years(p) && !by_paper[p as usize].is_empty())
        .map(|p| {
            let results = &by_paper[p as usize];
            let (result, defined) = mean_of_defined(results.iter().copied());
            PaperPivotRow {
                paper: p,
                result,
                defined_authors: defined,
                authors: results.len(),
            }
        })
        .collect();

    PivotTable {
        window,
        author_rows,
        paper_rows,
    }
}

impl PivotTable {
    pub fn paper_values(&self) -> HashMap<PaperIdx, f64> {
        self.paper_rows
            .iter()
            .filter_map(|r| r.result.value().map(|v| (r.paper, v)))
            .collect()
    }

    pub fn author_tsv(&self, corpus: &Corpus) -> String {
        let mut w = TsvWriter::new(&["author_id", "paper_id", "window", "pivot", "reason"]);
        for r in &self.author_rows {
            w.row([
                corpus.author_id(r.author).to_string(),
                corpus.paper(r.paper).paper_id.clone(),
                self.window.label().to_string(),
                r.result.value().map(num).unwrap_or_default(),
                r.result
                    .reason()
                    .map(|x| x.code().to_string())
                    .unwrap_or_default(),
            ]);
        }
        w.finish()
    }

    pub fn paper_tsv(&self, corpus: &Corpus) -> String {
        let mut w = TsvWriter::new(&[
            "paper_id",
            "window",
            "pivot",
            "defined_authors",
            "authors",
            "reason",
        ]);
        for r in &self.paper_rows {
            w.row([
                corpus.paper(r.paper).paper_id.clone(),
                self.window.label().to_string(),
                r.result.value().map(num).unwrap_or_default(),
                r.defined_authors.to_string(),
                r.authors.to_string(),
                r.result
                    .reason()
                    .map(|x| x.code().to_string())
                    .unwrap_or_default(),
            ]);
        }
        w.finish()
    }
}
