//! Author careers: established authors, profiles, matched controls and
//! new-collaborator tracking.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::corpus::{AuthorIdx, Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::par;
use crate::table::TsvWriter;
use crate::tagger::YearRange;

/// Authors with at least `min_pubs` papers dated in or before `cutoff_year`.
pub fn established_authors(corpus: &Corpus, min_pubs: usize, cutoff_year: i32) -> BTreeSet<String> {
    (0..corpus.n_authors() as AuthorIdx)
        .filter(|&a| {
            corpus
                .author_papers(a)
                .iter()
                .filter(|&&p| corpus.year(p) <= cutoff_year)
                .count()
                >= min_pubs
        })
        .map(|a| corpus.author_id(a).to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CareerProfile {
    pub author_id: String,
    pub first_pub_year: i32,
    pub last_pub_year: i32,
    pub modal_l0_field: Option<String>,
    pub modal_l1_field: Option<String>,
    /// Papers published inside the profile window.
    pub pub_count_window: usize,
    /// Citations received from papers published inside the profile window.
    pub prior_impact: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLevel {
    L0,
    L1,
}

/// Most frequent field over the given papers (each paper counts once per
/// field it lists); ties go to the smallest code, unfielded papers are
/// skipped.
pub fn modal_field<'a>(
    corpus: &'a Corpus,
    papers: impl IntoIterator<Item = &'a PaperIdx>,
    level: FieldLevel,
) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &p in papers {
        let rec = corpus.paper(p);
        let fields = match level {
            FieldLevel::L0 => &rec.fields_l0,
            FieldLevel::L1 => &rec.fields_l1,
        };
        for f in fields {
            *counts.entry(f.as_str()).or_default() += 1;
        }
    }
    // BTreeMap iterates in code order, so the first maximum is the smallest code.
    let mut best: Option<(&str, usize)> = None;
    for (f, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((f, n));
        }
    }
    best.map(|(f, _)| f.to_string())
}

fn profile_idx(corpus: &Corpus, a: AuthorIdx, window: YearRange) -> CareerProfile {
    let papers = corpus.author_papers(a);
    let years: Vec<i32> = papers.iter().map(|&p| corpus.year(p)).collect();
    let prior_impact = papers
        .iter()
        .map(|&p| {
            corpus
                .cited_by(p)
                .iter()
                .filter(|&&c| window.contains(corpus.year(c)))
                .count()
        })
        .sum();
    CareerProfile {
        author_id: corpus.author_id(a).to_string(),
        first_pub_year: years.iter().copied().min().unwrap_or_default(),
        last_pub_year: years.iter().copied().max().unwrap_or_default(),
        modal_l0_field: modal_field(corpus, papers, FieldLevel::L0),
        modal_l1_field: modal_field(corpus, papers, FieldLevel::L1),
        pub_count_window: years.iter().filter(|&&y| window.contains(y)).count(),
        prior_impact,
    }
}

pub fn career_profile(
    corpus: &Corpus,
    author_id: &str,
    window: YearRange,
) -> Result<CareerProfile> {
    let a = corpus.author_idx(author_id)?;
    Ok(profile_idx(corpus, a, window))
}

/// Profiles for a set of authors, keyed by author ID.
pub fn career_profiles(
    corpus: &Corpus,
    authors: &BTreeSet<String>,
    window: YearRange,
) -> Result<BTreeMap<String, CareerProfile>> {
    let idx: Vec<AuthorIdx> = authors
        .iter()
        .map(|a| corpus.author_idx(a))
        .collect::<Result<_>>()?;
    let profiles = par::map(&idx, |&a| profile_idx(corpus, a, window));
    Ok(profiles
        .into_iter()
        .map(|p| (p.author_id.clone(), p))
        .collect())
}

pub fn profiles_tsv(profiles: &BTreeMap<String, CareerProfile>) -> String {
    let mut w = TsvWriter::new(&[
        "author_id",
        "first_pub_year",
        "last_pub_year",
        "modal_l0_field",
        "modal_l1_field",
        "pub_count_window",
        "prior_impact",
    ]);
    for p in profiles.values() {
        w.row([
            p.author_id.clone(),
            p.first_pub_year.to_string(),
            p.last_pub_year.to_string(),
            p.modal_l0_field.clone().unwrap_or_default(),
            p.modal_l1_field.clone().unwrap_or_default(),
            p.pub_count_window.to_string(),
            p.prior_impact.to_string(),
        ]);
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchPair {
    pub treated: String,
    pub control: String,
    pub distance: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnmatchedReason {
    MissingProfile,
    NoPrimaryField,
    NoCandidates,
}

impl UnmatchedReason {
    pub fn code(self) -> &'static str {
        match self {
            UnmatchedReason::MissingProfile => "missing-profile",
            UnmatchedReason::NoPrimaryField => "no-primary-field",
            UnmatchedReason::NoCandidates => "no-candidates",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// In ascending treated-ID order.
    pub pairs: Vec<MatchPair>,
    pub unmatched: Vec<(String, UnmatchedReason)>,
}

impl Matching {
    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["treated_id", "control_id", "distance"]);
        for p in &self.pairs {
            w.row([p.treated.clone(), p.control.clone(), p.distance.to_string()]);
        }
        w.finish()
    }

    pub fn unmatched_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["treated_id", "reason"]);
        for (id, r) in &self.unmatched {
            w.row([id.clone(), r.code().to_string()]);
        }
        w.finish()
    }
}

type CohortKey = (i32, String);

/// Greedy nearest-neighbour matching without replacement. Treated authors
/// are processed in ascending ID order; each takes the unused pool author
/// with the same (first year, primary L1 field) closest in windowed
/// publication count, ties to the smaller ID.
pub fn match_controls(
    treated: &BTreeSet<String>,
    pool: &BTreeSet<String>,
    profiles: &BTreeMap<String, CareerProfile>,
) -> Result<Matching> {
    if let Some(both) = treated.intersection(pool).next() {
        return Err(Error::InvalidArgument(format!(
            "author {both} is in both the treated set and the pool"
        )));
    }
    let mut index: HashMap<CohortKey, BTreeSet<(usize, String)>> = HashMap::new();
    for id in pool {
        if let Some(p) = profiles.get(id) {
            if let Some(field) = &p.modal_l1_field {
                index
                    .entry((p.first_pub_year, field.clone()))
                    .or_default()
                    .insert((p.pub_count_window, id.clone()));
            }
        }
    }

    let mut out = Matching::default();
    for id in treated {
        let Some(profile) = profiles.get(id) else {
            out.unmatched
                .push((id.clone(), UnmatchedReason::MissingProfile));
            continue;
        };
        let Some(field) = &profile.modal_l1_field else {
            out.unmatched
                .push((id.clone(), UnmatchedReason::NoPrimaryField));
            continue;
        };
        let key = (profile.first_pub_year, field.clone());
        let Some(cands) = index.get_mut(&key) else {
            out.unmatched
                .push((id.clone(), UnmatchedReason::NoCandidates));
            continue;
        };
        let c = profile.pub_count_window;
        // closest count at or below c, smallest id at that count
        let below = cands
            .range(..=(c, char::MAX.to_string()))
            .next_back()
            .map(|(n, _)| *n)
            .and_then(|n| cands.range((n, String::new())..).next().cloned());
        let above = cands.range((c + 1, String::new())..).next().cloned();
        let best = match (below, above) {
            (Some(b), Some(a)) => {
                let (db, da) = (c - b.0, a.0 - c);
                if db < da || (db == da && b.1 < a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        };
        match best {
            Some(chosen) => {
                cands.remove(&chosen);
                out.pairs.push(MatchPair {
                    treated: id.clone(),
                    control: chosen.1,
                    distance: chosen.0.abs_diff(c),
                });
            }
            None => out
                .unmatched
                .push((id.clone(), UnmatchedReason::NoCandidates)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Same,
    Different,
    Unknown,
}

impl Relation {
    pub fn code(self) -> &'static str {
        match self {
            Relation::Same => "same",
            Relation::Different => "different",
            Relation::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewCollaborator {
    pub author_id: String,
    pub field: Relation,
    pub affiliation: Relation,
    /// Either side's affiliation came from an earlier paper.
    pub affiliation_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollaboratorEvent {
    pub author_id: String,
    pub paper_id: String,
    pub new_collaborators: Vec<NewCollaborator>,
}

/// Minimum earlier papers both sides need for the field comparison.
pub const MIN_PRIOR_PAPERS_FOR_FIELD: usize = 5;

fn prior_l1_field(corpus: &Corpus, a: AuthorIdx, year: i32) -> Option<String> {
    let prior: Vec<PaperIdx> = corpus
        .author_papers(a)
        .iter()
        .copied()
        .take_while(|&p| corpus.year(p) < year)
        .collect();
    if prior.len() < MIN_PRIOR_PAPERS_FOR_FIELD {
        return None;
    }
    modal_field(corpus, &prior, FieldLevel::L1)
}

fn career_key(corpus: &Corpus, p: PaperIdx) -> (chrono::NaiveDate, &str) {
    let r = corpus.paper(p);
    (r.pub_date.date, r.paper_id.as_str())
}

/// The author's affiliations on `paper`, or else those on their latest
/// earlier paper that records any (flagged as a fallback).
fn affiliation_at(
    corpus: &Corpus,
    a: AuthorIdx,
    paper: PaperIdx,
) -> Option<(&BTreeSet<String>, bool)> {
    let id = corpus.author_id(a);
    if let Some(s) = corpus
        .paper(paper)
        .affiliations
        .get(id)
        .filter(|s| !s.is_empty())
    {
        return Some((s, false));
    }
    let here = career_key(corpus, paper);
    corpus
        .author_papers(a)
        .iter()
        .rev()
        .filter(|&&p| career_key(corpus, p) < here)
        .find_map(|&p| {
            corpus
                .paper(p)
                .affiliations
                .get(id)
                .filter(|s| !s.is_empty())
        })
        .map(|s| (s, true))
}

fn collab_series_idx(
    corpus: &Corpus,
    a: AuthorIdx,
    established: &HashSet<AuthorIdx>,
) -> Vec<CollaboratorEvent> {
    let mut seen: HashSet<AuthorIdx> = HashSet::new();
    let mut field_cache: HashMap<(AuthorIdx, i32), Option<String>> = HashMap::new();
    let mut events = Vec::new();
    for &p in corpus.author_papers(a) {
        let year = corpus.year(p);
        let coauthors: Vec<AuthorIdx> = corpus
            .paper_authors(p)
            .iter()
            .copied()
            .filter(|&b| b != a && established.contains(&b))
            .collect();
        let mut fresh = Vec::new();
        for &b in &coauthors {
            if seen.contains(&b) {
                continue;
            }
            let mut field = |x: AuthorIdx| {
                field_cache
                    .entry((x, year))
                    .or_insert_with(|| prior_l1_field(corpus, x, year))
                    .clone()
            };
            let field_rel = match (field(a), field(b)) {
                (Some(x), Some(y)) if x == y => Relation::Same,
                (Some(_), Some(_)) => Relation::Different,
                _ => Relation::Unknown,
            };
            let (aff_rel, fallback) =
                match (affiliation_at(corpus, a, p), affiliation_at(corpus, b, p)) {
                    (Some((x, fx)), Some((y, fy))) => {
                        let rel = if x.intersection(y).next().is_some() {
                            Relation::Same
                        } else {
                            Relation::Different
                        };
                        (rel, fx || fy)
                    }
                    _ => (Relation::Unknown, false),
                };
            fresh.push(NewCollaborator {
                author_id: corpus.author_id(b).to_string(),
                field: field_rel,
                affiliation: aff_rel,
                affiliation_fallback: fallback,
            });
        }
        seen.extend(coauthors);
        events.push(CollaboratorEvent {
            author_id: corpus.author_id(a).to_string(),
            paper_id: corpus.paper(p).paper_id.clone(),
            new_collaborators: fresh,
        });
    }
    events
}

fn established_idx(corpus: &Corpus, established: &BTreeSet<String>) -> HashSet<AuthorIdx> {
    established
        .iter()
        .filter_map(|id| corpus.author_idx(id).ok())
        .collect()
}

/// One event per paper in the author's career, listing established
/// coauthors who have not appeared on any earlier paper.
pub fn new_collaborator_series(
    corpus: &Corpus,
    author_id: &str,
    established: &BTreeSet<String>,
) -> Result<Vec<CollaboratorEvent>> {
    if !established.contains(author_id) {
        return Err(Error::NotEstablished(author_id.to_string()));
    }
    let a = corpus.author_idx(author_id)?;
    Ok(collab_series_idx(
        corpus,
        a,
        &established_idx(corpus, established),
    ))
}

/// Series for many authors (all must be established), in input order.
pub fn collaborator_events(
    corpus: &Corpus,
    authors: &BTreeSet<String>,
    established: &BTreeSet<String>,
) -> Result<Vec<CollaboratorEvent>> {
    let est = established_idx(corpus, established);
    let mut idx = Vec::with_capacity(authors.len());
    for id in authors {
        if !established.contains(id) {
            return Err(Error::NotEstablished(id.clone()));
        }
        idx.push(corpus.author_idx(id)?);
    }
    Ok(par::map(&idx, |&a| collab_series_idx(corpus, a, &est))
        .into_iter()
        .flatten()
        .collect())
}

pub fn events_tsv(events: &[CollaboratorEvent]) -> String {
    let mut w = TsvWriter::new(&[
        "author_id",
        "paper_id",
        "new_collaborators",
        "same_field",
        "different_field",
        "unknown_field",
        "same_affiliation",
        "different_affiliation",
        "unknown_affiliation",
        "affiliation_fallbacks",
        "new_collaborator_ids",
    ]);
    for e in events {
        let count = |f: &dyn Fn(&NewCollaborator) -> bool| {
            e.new_collaborators
                .iter()
                .filter(|c| f(c))
                .count()
                .to_string()
        };
        w.row([
            e.author_id.clone(),
            e.paper_id.clone(),
            e.new_collaborators.len().to_string(),
            count(&|c| c.field == Relation::Same),
            count(&|c| c.field == Relation::Different),
            count(&|c| c.field == Relation::Unknown),
            count(&|c| c.affiliation == Relation::Same),
            count(&|c| c.affiliation == Relation::Different),
            count(&|c| c.affiliation == Relation::Unknown),
            count(&|c| c.affiliation_fallback),
            e.new_collaborators
                .iter()
                .map(|c| c.author_id.as_str())
                .collect::<Vec<_>>()
                .join(","),
        ]);
    }
    w.finish()
}
