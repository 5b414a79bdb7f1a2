//! Bibliographic corpus: line-delimited JSON ingest, preprint merging,
//! and the frozen indexes every analysis reads from.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::table::TsvWriter;

pub type PaperIdx = u32;
pub type AuthorIdx = u32;
pub type VenueIdx = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatePrecision {
    Day,
    Month,
    Year,
}

/// Publication date, stored at day precision. Coarser inputs are pinned to
/// the first day of their month/year and remember their original precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PubDate {
    pub date: NaiveDate,
    pub precision: DatePrecision,
}

impl PubDate {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let parts: Vec<&str> = s.split('-').collect();
        let num = |p: &str, len: usize| -> Option<u32> {
            if p.len() == len && p.bytes().all(|b| b.is_ascii_digit()) {
                p.parse().ok()
            } else {
                None
            }
        };
        let (y, m, d, precision) = match parts.as_slice() {
            [y] => (num(y, 4)?, 1, 1, DatePrecision::Year),
            [y, m] => (num(y, 4)?, num(m, 2)?, 1, DatePrecision::Month),
            [y, m, d] => (num(y, 4)?, num(m, 2)?, num(d, 2)?, DatePrecision::Day),
            _ => return None,
        };
        let date = NaiveDate::from_ymd_opt(y as i32, m, d)?;
        Some(Self { date, precision })
    }

    pub fn day(date: NaiveDate) -> Self {
        Self {
            date,
            precision: DatePrecision::Day,
        }
    }

    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

impl fmt::Display for PubDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.precision {
            DatePrecision::Day => write!(f, "{}", self.date.format("%Y-%m-%d")),
            DatePrecision::Month => write!(f, "{}", self.date.format("%Y-%m")),
            DatePrecision::Year => write!(f, "{:04}", self.date.year()),
        }
    }
}

impl Serialize for PubDate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One line of the input format, before validation.
#[derive(Debug, Clone, Deserialize)]
struct RawRecord {
    paper_id: String,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: Option<String>,
    #[serde(default)]
    venue_id: Option<String>,
    pub_date: String,
    #[serde(default)]
    fields_l0: BTreeSet<String>,
    #[serde(default)]
    fields_l1: BTreeSet<String>,
    #[serde(default)]
    author_ids: Vec<String>,
    #[serde(default)]
    references: BTreeSet<String>,
    #[serde(default)]
    grant_ids: BTreeSet<String>,
    #[serde(default)]
    is_preprint: bool,
    #[serde(default)]
    published_version_of: Option<String>,
    #[serde(default)]
    affiliations: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract", skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venue_id: Option<String>,
    pub pub_date: PubDate,
    pub fields_l0: BTreeSet<String>,
    pub fields_l1: BTreeSet<String>,
    pub author_ids: Vec<String>,
    pub references: BTreeSet<String>,
    pub grant_ids: BTreeSet<String>,
    pub is_preprint: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published_version_of: Option<String>,
    /// Affiliation IDs per author on this paper.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub affiliations: BTreeMap<String, BTreeSet<String>>,
}

impl PaperRecord {
    /// Minimal record for programmatic construction (tests, generators).
    pub fn new(paper_id: impl Into<String>, pub_date: PubDate) -> Self {
        Self {
            paper_id: paper_id.into(),
            title: String::new(),
            abstract_text: None,
            venue_id: None,
            pub_date,
            fields_l0: BTreeSet::new(),
            fields_l1: BTreeSet::new(),
            author_ids: Vec::new(),
            references: BTreeSet::new(),
            grant_ids: BTreeSet::new(),
            is_preprint: false,
            published_version_of: None,
            affiliations: BTreeMap::new(),
        }
    }

    pub fn year(&self) -> i32 {
        self.pub_date.year()
    }

    /// Serializes as one line of the input format (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    Malformed,
    MissingId,
    UnparseableDate,
    DateOutOfRange,
    DuplicateId,
    TooFewReferences,
}

impl DropReason {
    pub const ALL: [DropReason; 6] = [
        DropReason::Malformed,
        DropReason::MissingId,
        DropReason::UnparseableDate,
        DropReason::DateOutOfRange,
        DropReason::DuplicateId,
        DropReason::TooFewReferences,
    ];

    pub fn code(self) -> &'static str {
        match self {
            DropReason::Malformed => "malformed",
            DropReason::MissingId => "missing-id",
            DropReason::UnparseableDate => "unparseable-date",
            DropReason::DateOutOfRange => "date-out-of-range",
            DropReason::DuplicateId => "duplicate-id",
            DropReason::TooFewReferences => "too-few-references",
        }
    }
}

/// Reconciliation of an ingest run. `read = kept + dropped`; `merged`
/// counts kept preprints folded into their published twin, so the corpus
/// holds `kept - merged` records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub read: usize,
    pub kept: usize,
    pub merged: usize,
    pub dropped: BTreeMap<DropReason, usize>,
    pub dangling_references: usize,
    pub self_references: usize,
    pub unresolved_preprint_links: usize,
    pub coarse_dates: usize,
    /// First few drop diagnostics: (line number, reason, detail).
    pub samples: Vec<(usize, DropReason, String)>,
}

const MAX_SAMPLES: usize = 20;

impl ValidationReport {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn dropped_for(&self, reason: DropReason) -> usize {
        self.dropped.get(&reason).copied().unwrap_or(0)
    }

    fn drop(&mut self, line: usize, reason: DropReason, detail: String) {
        *self.dropped.entry(reason).or_default() += 1;
        if self.samples.len() < MAX_SAMPLES {
            self.samples.push((line, reason, detail));
        }
    }

    /// Accounts for a reference filter applied after ingest.
    pub fn record_filter(&mut self, before: &Corpus, after: &Corpus) {
        let removed = before.len() - after.len();
        self.kept -= removed;
        *self
            .dropped
            .entry(DropReason::TooFewReferences)
            .or_default() += removed;
        self.dangling_references = after.dangling_references();
    }

    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["metric", "value"]);
        w.row(["read".to_string(), self.read.to_string()]);
        w.row(["kept".to_string(), self.kept.to_string()]);
        w.row(["merged".to_string(), self.merged.to_string()]);
        w.row(["dropped".to_string(), self.dropped_total().to_string()]);
        for reason in DropReason::ALL {
            w.row([
                format!("dropped:{}", reason.code()),
                self.dropped_for(reason).to_string(),
            ]);
        }
        w.row([
            "dangling-references".to_string(),
            self.dangling_references.to_string(),
        ]);
        w.row([
            "self-references".to_string(),
            self.self_references.to_string(),
        ]);
        w.row([
            "unresolved-preprint-links".to_string(),
            self.unresolved_preprint_links.to_string(),
        ]);
        w.row(["coarse-dates".to_string(), self.coarse_dates.to_string()]);
        w.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestConfig {
    pub min_year: i32,
    pub max_year: i32,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            min_year: 1900,
            max_year: 2100,
        }
    }
}

/// Distinct combination of L1 fields plus publication year. An empty field
/// set is the per-year "unfielded" group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldYearKey {
    pub fields: Vec<String>,
    pub year: i32,
}

impl FieldYearKey {
    pub fn of(record: &PaperRecord) -> Self {
        Self {
            fields: record.fields_l1.iter().cloned().collect(),
            year: record.year(),
        }
    }

    pub fn is_unfielded(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field_label(&self) -> String {
        if self.fields.is_empty() {
            "unfielded".to_string()
        } else {
            self.fields.join("+")
        }
    }
}

impl fmt::Display for FieldYearKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.field_label(), self.year)
    }
}

/// Frozen, indexed corpus. Papers are stored in ascending `paper_id` order
/// and addressed by dense indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    paper_lookup: HashMap<String, PaperIdx>,
    years: Vec<i32>,
    refs: Vec<Vec<PaperIdx>>,
    cited_by: Vec<Vec<PaperIdx>>,
    venue_of: Vec<Option<VenueIdx>>,
    venues: Vec<String>,
    venue_lookup: HashMap<String, VenueIdx>,
    venue_papers: Vec<Vec<PaperIdx>>,
    authors: Vec<String>,
    author_lookup: HashMap<String, AuthorIdx>,
    author_papers: Vec<Vec<PaperIdx>>,
    paper_authors: Vec<Vec<AuthorIdx>>,
    field_years: BTreeMap<FieldYearKey, Vec<PaperIdx>>,
    dangling: usize,
}

impl Corpus {
    /// Builds indexes over already-validated records: unique IDs, no live
    /// preprint links. Self-references are stripped.
    pub fn from_records(mut papers: Vec<PaperRecord>) -> Self {
        papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
        for p in &mut papers {
            let id = p.paper_id.clone();
            p.references.remove(&id);
            let mut seen = BTreeSet::new();
            p.author_ids
                .retain(|a| !a.is_empty() && seen.insert(a.clone()));
        }

        let paper_lookup: HashMap<String, PaperIdx> = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id.clone(), i as PaperIdx))
            .collect();
        let years: Vec<i32> = papers.iter().map(PaperRecord::year).collect();

        let mut dangling = 0;
        let refs: Vec<Vec<PaperIdx>> = papers
            .iter()
            .map(|p| {
                let mut out: Vec<PaperIdx> = Vec::with_capacity(p.references.len());
                for r in &p.references {
                    match paper_lookup.get(r) {
                        Some(&t) => out.push(t),
                        None => dangling += 1,
                    }
                }
                out.sort_unstable();
                out
            })
            .collect();

        let mut cited_by: Vec<Vec<PaperIdx>> = vec![Vec::new(); papers.len()];
        for (src, targets) in refs.iter().enumerate() {
            for &t in targets {
                cited_by[t as usize].push(src as PaperIdx);
            }
        }

        let venues: Vec<String> = papers
            .iter()
            .filter_map(|p| p.venue_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let venue_lookup: HashMap<String, VenueIdx> = venues
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as VenueIdx))
            .collect();
        let venue_of: Vec<Option<VenueIdx>> = papers
            .iter()
            .map(|p| p.venue_id.as_ref().map(|v| venue_lookup[v]))
            .collect();
        let mut venue_papers = vec![Vec::new(); venues.len()];
        for (i, v) in venue_of.iter().enumerate() {
            if let Some(v) = v {
                venue_papers[*v as usize].push(i as PaperIdx);
            }
        }

        let authors: Vec<String> = papers
            .iter()
            .flat_map(|p| p.author_ids.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let author_lookup: HashMap<String, AuthorIdx> = authors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i as AuthorIdx))
            .collect();
        let paper_authors: Vec<Vec<AuthorIdx>> = papers
            .iter()
            .map(|p| p.author_ids.iter().map(|a| author_lookup[a]).collect())
            .collect();
        let mut author_papers: Vec<Vec<PaperIdx>> = vec![Vec::new(); authors.len()];
        for (i, list) in paper_authors.iter().enumerate() {
            for &a in list {
                author_papers[a as usize].push(i as PaperIdx);
            }
        }
        for list in &mut author_papers {
            // Papers are already in id order, so a stable sort on date gives
            // (pub_date, paper_id) order.
            list.sort_by_key(|&i| papers[i as usize].pub_date.date);
        }

        let mut field_years: BTreeMap<FieldYearKey, Vec<PaperIdx>> = BTreeMap::new();
        for (i, p) in papers.iter().enumerate() {
            field_years
                .entry(FieldYearKey::of(p))
                .or_default()
                .push(i as PaperIdx);
        }

        Self {
            papers,
            paper_lookup,
            years,
            refs,
            cited_by,
            venue_of,
            venues,
            venue_lookup,
            venue_papers,
            authors,
            author_lookup,
            author_papers,
            paper_authors,
            field_years,
            dangling,
        }
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn paper(&self, idx: PaperIdx) -> &PaperRecord {
        &self.papers[idx as usize]
    }

    pub fn paper_idx(&self, paper_id: &str) -> Result<PaperIdx> {
        self.paper_lookup
            .get(paper_id)
            .copied()
            .ok_or_else(|| Error::UnknownPaper(paper_id.to_string()))
    }

    pub fn contains_paper(&self, paper_id: &str) -> bool {
        self.paper_lookup.contains_key(paper_id)
    }

    pub fn year(&self, idx: PaperIdx) -> i32 {
        self.years[idx as usize]
    }

    /// In-corpus reference targets, ascending.
    pub fn references(&self, idx: PaperIdx) -> &[PaperIdx] {
        &self.refs[idx as usize]
    }

    /// In-corpus citing papers, ascending.
    pub fn cited_by(&self, idx: PaperIdx) -> &[PaperIdx] {
        &self.cited_by[idx as usize]
    }

    pub fn venue_of(&self, idx: PaperIdx) -> Option<VenueIdx> {
        self.venue_of[idx as usize]
    }

    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn venue_id(&self, v: VenueIdx) -> &str {
        &self.venues[v as usize]
    }

    pub fn venue_idx(&self, venue_id: &str) -> Result<VenueIdx> {
        self.venue_lookup
            .get(venue_id)
            .copied()
            .ok_or_else(|| Error::UnknownVenue(venue_id.to_string()))
    }

    pub fn venue_papers(&self, v: VenueIdx) -> &[PaperIdx] {
        &self.venue_papers[v as usize]
    }

    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }

    pub fn author_id(&self, a: AuthorIdx) -> &str {
        &self.authors[a as usize]
    }

    pub fn author_ids(&self) -> &[String] {
        &self.authors
    }

    pub fn author_idx(&self, author_id: &str) -> Result<AuthorIdx> {
        self.author_lookup
            .get(author_id)
            .copied()
            .ok_or_else(|| Error::UnknownAuthor(author_id.to_string()))
    }

    /// The author's papers in career order: (pub_date, paper_id).
    pub fn author_papers(&self, a: AuthorIdx) -> &[PaperIdx] {
        &self.author_papers[a as usize]
    }

    /// Distinct authors of a paper in byline order.
    pub fn paper_authors(&self, idx: PaperIdx) -> &[AuthorIdx] {
        &self.paper_authors[idx as usize]
    }

    pub fn field_year_groups(&self) -> &BTreeMap<FieldYearKey, Vec<PaperIdx>> {
        &self.field_years
    }

    /// Reference entries whose target is not in the corpus.
    pub fn dangling_references(&self) -> usize {
        self.dangling
    }

    pub fn max_date(&self) -> Option<NaiveDate> {
        self.papers.iter().map(|p| p.pub_date.date).max()
    }

    /// Number of distinct in-corpus papers citing `paper_id` with
    /// `pub_date <= as_of`. Citers dated before the cited paper still count.
    pub fn citation_count(&self, paper_id: &str, as_of: NaiveDate) -> Result<usize> {
        let idx = self.paper_idx(paper_id)?;
        Ok(self.citation_count_idx(idx, as_of))
    }

    pub fn citation_count_idx(&self, idx: PaperIdx, as_of: NaiveDate) -> usize {
        self.cited_by(idx)
            .iter()
            .filter(|&&c| self.papers[c as usize].pub_date.date <= as_of)
            .count()
    }

    /// Keeps papers with at least `k` raw references (dangling included).
    pub fn filter_min_references(&self, k: usize) -> Corpus {
        if k == 0 {
            return self.clone();
        }
        let kept: Vec<PaperRecord> = self
            .papers
            .iter()
            .filter(|p| p.references.len() >= k)
            .cloned()
            .collect();
        if kept.len() == self.papers.len() {
            return self.clone();
        }
        Corpus::from_records(kept)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.papers {
            out.write_all(p.to_json_line().as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn summary_tsv(&self) -> String {
        let edges: usize = self.refs.iter().map(Vec::len).sum();
        let years = self.years.iter();
        let mut w = TsvWriter::new(&["metric", "value"]);
        w.row(["papers".to_string(), self.len().to_string()]);
        w.row(["authors".to_string(), self.n_authors().to_string()]);
        w.row(["venues".to_string(), self.n_venues().to_string()]);
        w.row([
            "field-year-groups".to_string(),
            self.field_years.len().to_string(),
        ]);
        w.row(["in-corpus-reference-edges".to_string(), edges.to_string()]);
        w.row(["dangling-references".to_string(), self.dangling.to_string()]);
        w.row([
            "year-min".to_string(),
            years
                .clone()
                .min()
                .map(|y| y.to_string())
                .unwrap_or_default(),
        ]);
        w.row([
            "year-max".to_string(),
            years.max().map(|y| y.to_string()).unwrap_or_default(),
        ]);
        w.finish()
    }
}

/// Reads line-delimited records. Bad lines are dropped with a reason; only
/// a failure of the underlying reader is fatal.
pub fn ingest<R: BufRead>(input: R, config: &IngestConfig) -> Result<(Corpus, ValidationReport)> {
    let mut report = ValidationReport::default();
    let mut accepted: Vec<PaperRecord> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.read += 1;
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                report.drop(lineno, DropReason::Malformed, e.to_string());
                continue;
            }
        };
        if raw.paper_id.trim().is_empty() {
            report.drop(lineno, DropReason::MissingId, String::new());
            continue;
        }
        let Some(pub_date) = PubDate::parse(&raw.pub_date) else {
            report.drop(lineno, DropReason::UnparseableDate, raw.pub_date);
            continue;
        };
        if pub_date.year() < config.min_year || pub_date.year() > config.max_year {
            report.drop(lineno, DropReason::DateOutOfRange, raw.pub_date);
            continue;
        }
        if seen.contains_key(&raw.paper_id) {
            report.drop(lineno, DropReason::DuplicateId, raw.paper_id);
            continue;
        }
        if pub_date.precision != DatePrecision::Day {
            report.coarse_dates += 1;
        }
        seen.insert(raw.paper_id.clone(), accepted.len());
        accepted.push(PaperRecord {
            paper_id: raw.paper_id,
            title: raw.title,
            abstract_text: raw.abstract_text,
            venue_id: raw.venue_id.filter(|v| !v.is_empty()),
            pub_date,
            fields_l0: raw.fields_l0,
            fields_l1: raw.fields_l1,
            author_ids: raw.author_ids,
            references: raw.references,
            grant_ids: raw.grant_ids,
            is_preprint: raw.is_preprint,
            published_version_of: raw.published_version_of.filter(|v| !v.is_empty()),
            affiliations: raw.affiliations,
        });
    }
    report.kept = accepted.len();

    let records = merge_preprints(accepted, &seen, &mut report);
    let self_refs: usize = records
        .iter()
        .filter(|p| p.references.contains(&p.paper_id))
        .count();
    report.self_references += self_refs;
    let corpus = Corpus::from_records(records);
    report.dangling_references = corpus.dangling_references();
    Ok((corpus, report))
}

pub fn ingest_path(path: &Path, config: &IngestConfig) -> Result<(Corpus, ValidationReport)> {
    let file = std::fs::File::open(path)?;
    ingest(std::io::BufReader::new(file), config)
}

pub fn ingest_str(text: &str, config: &IngestConfig) -> (Corpus, ValidationReport) {
    ingest(text.as_bytes(), config).expect("reading from memory cannot fail")
}

/// Folds each preprint into the record it links to (following chains),
/// rewriting every reference to the preprint onto the surviving record.
fn merge_preprints(
    mut records: Vec<PaperRecord>,
    index: &HashMap<String, usize>,
    report: &mut ValidationReport,
) -> Vec<PaperRecord> {
    let n = records.len();
    let successor = |i: usize| -> Option<usize> {
        records[i]
            .published_version_of
            .as_ref()
            .and_then(|id| index.get(id).copied())
            .filter(|&j| j != i)
    };
    // Follow links to the end of the chain; a cycle resolves to its
    // earliest member in input order.
    let canonical: Vec<usize> = (0..n)
        .map(|i| {
            let mut path = vec![i];
            let mut cur = i;
            while let Some(next) = successor(cur) {
                if let Some(pos) = path.iter().position(|&p| p == next) {
                    return *path[pos..].iter().min().unwrap();
                }
                path.push(next);
                cur = next;
            }
            cur
        })
        .collect();

    for rec in records.iter_mut() {
        if let Some(link) = &rec.published_version_of {
            if !index.contains_key(link) {
                report.unresolved_preprint_links += 1;
            }
        }
    }

    let id_of: Vec<String> = records.iter().map(|r| r.paper_id.clone()).collect();
    let rename: HashMap<&str, &str> = (0..n)
        .filter(|&i| canonical[i] != i)
        .map(|i| (id_of[i].as_str(), id_of[canonical[i]].as_str()))
        .collect();

    for i in 0..n {
        let root = canonical[i];
        if root == i {
            continue;
        }
        let placeholder = PaperRecord::new("", records[i].pub_date);
        let donor = std::mem::replace(&mut records[i], placeholder);
        let target = &mut records[root];
        target.references.extend(donor.references);
        target.grant_ids.extend(donor.grant_ids);
        for a in donor.author_ids {
            if !target.author_ids.contains(&a) {
                target.author_ids.push(a);
            }
        }
        for (a, affs) in donor.affiliations {
            target.affiliations.entry(a).or_insert(affs);
        }
        report.merged += 1;
    }

    let mut out: Vec<PaperRecord> = records
        .into_iter()
        .enumerate()
        .filter(|(i, _)| canonical[*i] == *i)
        .map(|(_, r)| r)
        .collect();
    for rec in &mut out {
        rec.published_version_of = None;
        if !rename.is_empty() {
            let refs = std::mem::take(&mut rec.references);
            rec.references = refs
                .into_iter()
                .map(|r| rename.get(r.as_str()).map(|s| s.to_string()).unwrap_or(r))
                .collect();
        }
    }
    out
}
