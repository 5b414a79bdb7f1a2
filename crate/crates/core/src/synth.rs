//! Seeded synthetic corpora with a planted pivot penalty.
//!
//! Authors work in teams that share a home mix of venues. Every reference
//! slot of a paper takes its venue either from the team's home mix or
//! uniformly from all venues, so the per-paper fresh share controls pivot
//! size. The generator measures each paper's realized pivot the same way the
//! analysis does, plants a latent propensity
//! `base + beta * pivot + field-year effect + U(0, 1)`, and realizes citation
//! counts so that exactly the top share of each field-year group by
//! propensity become hits.
//!
//! Randomness comes from a single ChaCha8 stream seeded with
//! `seed_from_u64`. Only integer draws on `u64` ranges and uniform `f64`
//! draws are used, so output is bit-identical across platforms.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{PaperRecord, PubDate};
use crate::error::{Error, Result};
use crate::metrics::threshold_rank;
use crate::pivot::{pivot_between, VenueVector};
use crate::table::{num, opt_num, TsvWriter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_authors: usize,
    pub n_venues: usize,
    pub n_fields: usize,
    pub first_year: i32,
    /// Final year; topic adoption happens only here.
    pub last_year: i32,
    pub papers_per_author_year: f64,
    pub max_team: usize,
    pub refs_min: usize,
    pub refs_max: usize,
    /// Venues in each team's home mix.
    pub home_venues: usize,
    /// Per-paper probability that a reference comes from the home mix is
    /// drawn uniformly from this range. `[1, 1]` gives pure home mixes.
    pub home_mix: [f64; 2],
    /// Effect of pivot size on latent hit propensity.
    pub beta: f64,
    /// Per-field override of `beta`; empty means every field uses `beta`.
    pub field_betas: Vec<f64>,
    pub base_propensity: f64,
    /// Width of the uniform field-year effect.
    pub field_year_spread: f64,
    /// Share of papers counted as hits in each field-year group.
    pub hit_share: f64,
    /// Citations a planted hit receives; other papers get fewer.
    pub hit_citations: usize,
    /// Chance a reference slot targets an earlier generated paper that
    /// still needs citations, rather than an archive record.
    pub internal_citation_prob: f64,
    /// Final-year adoption probability is `topic_base + topic_slope * p`
    /// where `p` is the mean planted proximity of the paper's authors.
    pub topic_base: f64,
    pub topic_slope: f64,
    /// Topic papers scale their home-mix probability by `1 - boost`.
    pub topic_fresh_boost: f64,
    pub funded_prob: f64,
    pub affiliation_missing_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_authors: 2000,
            n_venues: 60,
            n_fields: 6,
            first_year: 2010,
            last_year: 2020,
            papers_per_author_year: 0.9,
            max_team: 5,
            refs_min: 8,
            refs_max: 20,
            home_venues: 3,
            home_mix: [0.0, 1.0],
            beta: -0.05,
            field_betas: Vec::new(),
            base_propensity: 0.0,
            field_year_spread: 1.0,
            hit_share: 0.05,
            hit_citations: 3,
            internal_citation_prob: 0.3,
            topic_base: 0.02,
            topic_slope: 0.2,
            topic_fresh_boost: 0.5,
            funded_prob: 0.3,
            affiliation_missing_prob: 0.05,
        }
    }
}

fn unit(name: &str, v: f64, out: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(format!("{name} must lie in [0, 1], got {v}"));
    }
}

impl SynthConfig {
    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, n) in [
            ("n_authors", self.n_authors),
            ("n_venues", self.n_venues),
            ("n_fields", self.n_fields),
            ("max_team", self.max_team),
            ("home_venues", self.home_venues),
            ("hit_citations", self.hit_citations),
        ] {
            if n == 0 {
                v.push(format!("{name} must be positive"));
            }
        }
        if self.n_venues < self.n_fields {
            v.push(format!(
                "n_venues ({}) must be at least n_fields ({})",
                self.n_venues, self.n_fields
            ));
        }
        if self.first_year > self.last_year {
            v.push(format!(
                "first_year {} is after last_year {}",
                self.first_year, self.last_year
            ));
        }
        if self.first_year < 1901 || self.last_year > 2099 {
            v.push("years must lie within 1901..=2099".to_string());
        }
        if !(self.papers_per_author_year.is_finite() && self.papers_per_author_year > 0.0) {
            v.push("papers_per_author_year must be positive".to_string());
        }
        if self.refs_min < 5 {
            v.push(format!(
                "refs_min must be at least 5 so no paper fails the reference filter, got {}",
                self.refs_min
            ));
        }
        if self.refs_max < self.refs_min {
            v.push(format!(
                "refs_max ({}) is below refs_min ({})",
                self.refs_max, self.refs_min
            ));
        }
        unit("home_mix[0]", self.home_mix[0], &mut v);
        unit("home_mix[1]", self.home_mix[1], &mut v);
        if self.home_mix[0] > self.home_mix[1] {
            v.push("home_mix range is reversed".to_string());
        }
        if !self.beta.is_finite() {
            v.push("beta must be finite".to_string());
        }
        if !self.field_betas.is_empty() && self.field_betas.len() != self.n_fields {
            v.push(format!(
                "field_betas has {} entries for {} fields",
                self.field_betas.len(),
                self.n_fields
            ));
        }
        if self.field_betas.iter().any(|b| !b.is_finite()) {
            v.push("field_betas must be finite".to_string());
        }
        if !self.base_propensity.is_finite()
            || !(self.field_year_spread.is_finite() && self.field_year_spread >= 0.0)
        {
            v.push(
                "base_propensity and field_year_spread must be finite, spread nonnegative"
                    .to_string(),
            );
        }
        if !(self.hit_share > 0.0 && self.hit_share < 1.0) {
            v.push(format!(
                "hit_share must lie in (0, 1), got {}",
                self.hit_share
            ));
        }
        unit(
            "internal_citation_prob",
            self.internal_citation_prob,
            &mut v,
        );
        unit("topic_base", self.topic_base, &mut v);
        unit("topic_slope", self.topic_slope, &mut v);
        unit(
            "topic_base + topic_slope",
            self.topic_base + self.topic_slope,
            &mut v,
        );
        unit("topic_fresh_boost", self.topic_fresh_boost, &mut v);
        unit("funded_prob", self.funded_prob, &mut v);
        unit(
            "affiliation_missing_prob",
            self.affiliation_missing_prob,
            &mut v,
        );
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    fn beta_for(&self, field: usize) -> f64 {
        self.field_betas.get(field).copied().unwrap_or(self.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperTruth {
    pub paper_id: String,
    pub field: String,
    pub year: i32,
    /// Expected share of references drawn outside the home mix.
    pub phi_target: f64,
    /// Realized three-year pivot; `None` for papers with no prior work.
    pub phi: Option<f64>,
    pub latent: f64,
    pub citations: usize,
    pub planted_hit: bool,
    pub topic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthorTruth {
    pub author_id: String,
    pub team: usize,
    pub field: String,
    pub proximity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub beta: f64,
    pub field_betas: BTreeMap<String, f64>,
    pub papers: Vec<PaperTruth>,
    pub authors: Vec<AuthorTruth>,
    /// Archive and citing-bank records added to carry citations.
    pub support_papers: usize,
    /// Citations that could not be placed; zero by construction.
    pub unmet_demand: usize,
}

impl GroundTruth {
    pub fn papers_tsv(&self) -> String {
        let mut w = TsvWriter::new(&[
            "paper_id",
            "field",
            "year",
            "phi_target",
            "phi",
            "latent",
            "citations",
            "planted_hit",
            "topic",
        ]);
        for p in &self.papers {
            w.row([
                p.paper_id.clone(),
                p.field.clone(),
                p.year.to_string(),
                num(p.phi_target),
                opt_num(p.phi),
                num(p.latent),
                p.citations.to_string(),
                (p.planted_hit as u8).to_string(),
                (p.topic as u8).to_string(),
            ]);
        }
        w.finish()
    }

    pub fn authors_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["author_id", "team", "field", "proximity"]);
        for a in &self.authors {
            w.row([
                a.author_id.clone(),
                a.team.to_string(),
                a.field.clone(),
                num(a.proximity),
            ]);
        }
        w.finish()
    }

    pub fn summary_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["key", "value"]);
        w.row(["beta".to_string(), num(self.beta)]);
        for (f, b) in &self.field_betas {
            w.row([format!("beta:{f}"), num(*b)]);
        }
        w.row(["papers".to_string(), self.papers.len().to_string()]);
        w.row(["authors".to_string(), self.authors.len().to_string()]);
        w.row([
            "support_papers".to_string(),
            self.support_papers.to_string(),
        ]);
        w.row(["unmet_demand".to_string(), self.unmet_demand.to_string()]);
        w.finish()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<PaperRecord>,
    pub truth: GroundTruth,
}

impl SynthCorpus {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_json_line());
            out.push('\n');
        }
        out
    }
}

const GENERIC_WORDS: [&str; 16] = [
    "analysis",
    "model",
    "evidence",
    "effects",
    "study",
    "dynamics",
    "response",
    "network",
    "data",
    "theory",
    "systems",
    "design",
    "review",
    "patterns",
    "measurement",
    "methods",
];
const SYLLABLES: [&str; 12] = [
    "ka", "lo", "mi", "ra", "ten", "vo", "zu", "pel", "dor", "sin", "bex", "qua",
];
const FIELD_WORDS: usize = 8;
const ARCHIVE_PER_VENUE: usize = 40;
const BANK_REFS: usize = 20;

fn field_word(field: usize, k: usize) -> String {
    let s = SYLLABLES.len();
    format!(
        "{}{}{}",
        SYLLABLES[field % s],
        SYLLABLES[(field / s + k) % s],
        SYLLABLES[(field + 3 * k + 1) % s]
    )
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn u(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n as u64) as usize
    }

    fn chance(&mut self, p: f64) -> bool {
        self.u() < p
    }

    fn weighted(&mut self, cumulative: &[f64]) -> usize {
        let total = *cumulative.last().expect("nonempty weights");
        let x = self.u() * total;
        cumulative
            .partition_point(|&c| c <= x)
            .min(cumulative.len() - 1)
    }
}

struct Team {
    field: usize,
    members: Vec<usize>,
    home: Vec<u32>,
    home_cum: Vec<f64>,
}

#[derive(Default)]
struct Node {
    date: Option<NaiveDate>,
    venue: Option<u32>,
    authors: Vec<usize>,
    slots: Vec<u32>,
    refs: BTreeSet<usize>,
    field: Option<usize>,
    team: usize,
    title: String,
    funded: bool,
    missing_aff: Vec<usize>,
    truth: Option<usize>,
}

struct Planted {
    node: usize,
    phi_target: f64,
    phi: Option<f64>,
    latent: f64,
    demand: usize,
    hit: bool,
    topic: bool,
}

fn date_in(year: i32, g: &mut Gen) -> NaiveDate {
    let days = NaiveDate::from_ymd_opt(year, 12, 31).unwrap().ordinal();
    NaiveDate::from_yo_opt(year, 1 + g.below(days as usize) as u32).unwrap()
}

/// Builds a corpus and its planted truth. Identical configs give identical
/// output.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let c = config;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(c.seed),
    };

    let field_venues: Vec<Vec<u32>> = (0..c.n_fields)
        .map(|f| {
            (0..c.n_venues as u32)
                .filter(|v| *v as usize % c.n_fields == f)
                .collect()
        })
        .collect();
    let n_institutions = (c.n_authors / 25).max(2);

    let mut teams: Vec<Team> = Vec::new();
    let mut author_team = Vec::with_capacity(c.n_authors);
    let mut author_inst = Vec::with_capacity(c.n_authors);
    let mut proximity = Vec::with_capacity(c.n_authors);
    while author_team.len() < c.n_authors {
        let size = (1 + g.below(c.max_team)).min(c.n_authors - author_team.len());
        let field = g.below(c.n_fields);
        let mut pool = field_venues[field].clone();
        let k = c.home_venues.min(pool.len());
        for i in 0..k {
            let j = i + g.below(pool.len() - i);
            pool.swap(i, j);
        }
        let home: Vec<u32> = pool[..k].to_vec();
        let mut acc = 0.0;
        let home_cum = (0..k)
            .map(|_| {
                acc += 0.2 + 0.8 * g.u();
                acc
            })
            .collect();
        let institution = g.below(n_institutions);
        let t = teams.len();
        let mut members = Vec::with_capacity(size);
        for _ in 0..size {
            members.push(author_team.len());
            author_team.push(t);
            author_inst.push(if g.chance(0.15) {
                g.below(n_institutions)
            } else {
                institution
            });
            proximity.push(g.u());
        }
        teams.push(Team {
            field,
            members,
            home,
            home_cum,
        });
    }

    let mut nodes: Vec<Node> = Vec::new();
    // Archive records: per venue, dated the year before the window, citing
    // each other so they satisfy the reference floor.
    let archive_year = c.first_year - 1;
    let archive_per_venue = ARCHIVE_PER_VENUE.max(c.refs_max + 1);
    let mut archive: Vec<Vec<usize>> = Vec::with_capacity(c.n_venues);
    for v in 0..c.n_venues as u32 {
        let start = nodes.len();
        let ids: Vec<usize> = (start..start + archive_per_venue).collect();
        for (i, _) in ids.iter().enumerate() {
            let refs = (1..=5)
                .map(|d| start + (i + d) % archive_per_venue)
                .collect();
            nodes.push(Node {
                date: Some(NaiveDate::from_ymd_opt(archive_year, 1, 1).unwrap()),
                venue: Some(v),
                refs,
                title: format!("archive record {v} {i}"),
                ..Node::default()
            });
        }
        archive.push(ids);
    }
    let support_archive = nodes.len();

    let field_year_fx: Vec<Vec<f64>> = (0..c.n_fields)
        .map(|_| {
            (c.first_year..=c.last_year)
                .map(|_| c.field_year_spread * (g.u() - 0.5))
                .collect()
        })
        .collect();

    let mut history: Vec<Vec<usize>> = vec![Vec::new(); c.n_authors];
    let mut planted: Vec<Planted> = Vec::new();
    // Open citation demand per venue, with each target's slot in that list.
    let mut open: Vec<Vec<usize>> = vec![Vec::new(); c.n_venues];
    let mut open_pos: HashMap<usize, usize> = HashMap::new();
    let mut demand_left: HashMap<usize, usize> = HashMap::new();

    for year in c.first_year..=c.last_year {
        let final_year = year == c.last_year;
        let mut drafts: Vec<(Node, f64, bool)> = Vec::new();
        for (t, team) in teams.iter().enumerate() {
            let expected = c.papers_per_author_year * team.members.len() as f64;
            let mut k = expected.floor() as usize;
            if g.chance(expected - expected.floor()) {
                k += 1;
            }
            for _ in 0..k {
                let lead = g.below(team.members.len());
                let mut authors: Vec<usize> = team
                    .members
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i == lead || g.chance(0.5))
                    .map(|(_, &a)| a)
                    .collect();
                authors.sort_unstable();
                let mean_prox =
                    authors.iter().map(|&a| proximity[a]).sum::<f64>() / authors.len() as f64;
                let topic = final_year && g.chance(c.topic_base + c.topic_slope * mean_prox);
                let mut home_p = c.home_mix[0] + (c.home_mix[1] - c.home_mix[0]) * g.u();
                if topic {
                    home_p *= 1.0 - c.topic_fresh_boost;
                }
                let venue = team.home[g.weighted(&team.home_cum)];
                let n_refs = c.refs_min + g.below(c.refs_max - c.refs_min + 1);
                let slots = (0..n_refs)
                    .map(|_| {
                        if g.chance(home_p) {
                            team.home[g.weighted(&team.home_cum)]
                        } else {
                            g.below(c.n_venues) as u32
                        }
                    })
                    .collect();
                let date = date_in(year, &mut g);
                let funded = g.chance(c.funded_prob);
                let missing_aff = authors
                    .iter()
                    .copied()
                    .filter(|_| g.chance(c.affiliation_missing_prob))
                    .collect();
                let mut words: Vec<String> = Vec::new();
                if topic {
                    words.push("COVID-19".into());
                }
                for _ in 0..2 {
                    words.push(field_word(team.field, g.below(FIELD_WORDS)));
                }
                for _ in 0..1 + g.below(3) {
                    words.push(GENERIC_WORDS[g.below(GENERIC_WORDS.len())].into());
                }
                if topic {
                    words.push("pandemic".into());
                }
                drafts.push((
                    Node {
                        date: Some(date),
                        venue: Some(venue),
                        authors,
                        slots,
                        field: Some(team.field),
                        team: t,
                        title: words.join(" "),
                        funded,
                        missing_aff,
                        ..Node::default()
                    },
                    1.0 - home_p,
                    topic,
                ));
            }
        }
        drafts.sort_by_key(|(n, _, _)| n.date);

        // Realized pivot per paper, mirroring the three-year window.
        let mut priors: HashMap<usize, Option<VenueVector>> = HashMap::new();
        let first_new = nodes.len();
        let mut by_field: Vec<Vec<usize>> = vec![Vec::new(); c.n_fields];
        for (node, phi_target, topic) in drafts {
            let focal = VenueVector::from_occurrences(node.slots.clone());
            let mut sum = 0.0;
            let mut defined = 0usize;
            for &a in &node.authors {
                let prior = priors.entry(a).or_insert_with(|| {
                    let venues: Vec<u32> = history[a]
                        .iter()
                        .rev()
                        .take_while(|&&p| nodes[p].date.unwrap().year() >= year - 3)
                        .flat_map(|&p| nodes[p].slots.iter().copied())
                        .collect();
                    (!venues.is_empty()).then(|| VenueVector::from_occurrences(venues))
                });
                if let Some(prior) = prior {
                    sum += pivot_between(&focal, prior);
                    defined += 1;
                }
            }
            let phi = (defined > 0).then(|| sum / defined as f64);
            let field = node.field.unwrap();
            let fe = field_year_fx[field][(year - c.first_year) as usize];
            let latent =
                c.base_propensity + c.beta_for(field) * phi.unwrap_or(phi_target) + fe + g.u();
            let idx = nodes.len();
            by_field[field].push(planted.len());
            let mut node = node;
            node.truth = Some(planted.len());
            planted.push(Planted {
                node: idx,
                phi_target,
                phi,
                latent,
                demand: 0,
                hit: false,
                topic,
            });
            nodes.push(node);
        }

        // Citation demand: the top share of each field-year group gets
        // `hit_citations`, the rest fewer in order of propensity.
        for members in &by_field {
            let n = members.len();
            if n == 0 {
                continue;
            }
            let mut order = members.clone();
            order.sort_by(|&a, &b| {
                planted[a]
                    .latent
                    .total_cmp(&planted[b].latent)
                    .then(a.cmp(&b))
            });
            let cut = threshold_rank(1.0 - c.hit_share, n);
            for (rank, &pi) in order.iter().enumerate() {
                let p = &mut planted[pi];
                if rank >= cut {
                    p.demand = c.hit_citations;
                    p.hit = true;
                } else {
                    p.demand = c.hit_citations * rank / cut.max(1);
                }
            }
        }

        // Reference targets for this year's papers. Generated targets come
        // only from earlier years; everything else goes to the archive.
        for node in &mut nodes[first_new..] {
            let slots = std::mem::take(&mut node.slots);
            let mut refs = BTreeSet::new();
            let mut archive_need: BTreeMap<u32, usize> = BTreeMap::new();
            for &v in &slots {
                let list = &mut open[v as usize];
                let mut placed = false;
                if !list.is_empty() && g.chance(c.internal_citation_prob) {
                    let target = list[g.below(list.len())];
                    if refs.insert(target) {
                        placed = true;
                        let left = demand_left.get_mut(&target).unwrap();
                        *left -= 1;
                        if *left == 0 {
                            let pos = open_pos.remove(&target).unwrap();
                            list.swap_remove(pos);
                            if let Some(&moved) = list.get(pos) {
                                open_pos.insert(moved, pos);
                            }
                            demand_left.remove(&target);
                        }
                    }
                }
                if !placed {
                    *archive_need.entry(v).or_default() += 1;
                }
            }
            for (v, k) in archive_need {
                let pool = &archive[v as usize];
                let start = g.below(pool.len());
                refs.extend((0..k).map(|i| pool[(start + i) % pool.len()]));
            }
            node.slots = slots;
            node.refs = refs;
        }
        for (idx, node) in nodes.iter().enumerate().skip(first_new) {
            let pi = node.truth.unwrap();
            let d = planted[pi].demand;
            if d > 0 {
                let v = node.venue.unwrap() as usize;
                open_pos.insert(idx, open[v].len());
                open[v].push(idx);
                demand_left.insert(idx, d);
            }
            for &a in &node.authors {
                history[a].push(idx);
            }
        }
    }

    // Remaining demand is met by citing records dated after the window.
    let mut owed: Vec<(usize, usize)> = demand_left.into_iter().collect();
    owed.sort_unstable();
    let flat: Vec<usize> = owed
        .iter()
        .flat_map(|&(t, d)| std::iter::repeat_n(t, d))
        .collect();
    let bank_start = nodes.len();
    if !flat.is_empty() {
        let n_bank = flat.len().div_ceil(BANK_REFS).max(c.hit_citations);
        let bank_date = NaiveDate::from_ymd_opt(c.last_year + 1, 1, 1).unwrap();
        for i in 0..n_bank {
            nodes.push(Node {
                date: Some(bank_date),
                title: format!("citing record {i}"),
                ..Node::default()
            });
        }
        for (i, &t) in flat.iter().enumerate() {
            nodes[bank_start + i % n_bank].refs.insert(t);
        }
        for node in &mut nodes[bank_start..] {
            let mut k = 0;
            while node.refs.len() < 5 {
                node.refs.insert(archive[0][k]);
                k += 1;
            }
        }
    }

    let paper_id = |i: usize| format!("P{i:07}");
    let author_id = |a: usize| format!("A{a:06}");
    let field_id = |f: usize| format!("F{f:02}");

    let mut citations = vec![0usize; nodes.len()];
    for n in &nodes {
        for &r in &n.refs {
            citations[r] += 1;
        }
    }
    let unmet_demand = planted
        .iter()
        .map(|p| p.demand.saturating_sub(citations[p.node]))
        .sum();

    let records: Vec<PaperRecord> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut r = PaperRecord::new(paper_id(i), PubDate::day(n.date.unwrap()));
            r.title = n.title.clone();
            r.venue_id = n.venue.map(|v| format!("V{v:04}"));
            if let Some(f) = n.field {
                r.fields_l1.insert(field_id(f));
                r.fields_l0.insert(format!("D{:02}", f / 4));
            }
            r.author_ids = n.authors.iter().map(|&a| author_id(a)).collect();
            r.references = n.refs.iter().map(|&t| paper_id(t)).collect();
            if n.funded {
                r.grant_ids
                    .insert(format!("G{:05}-{}", n.team, n.date.unwrap().year()));
            }
            for &a in &n.authors {
                if !n.missing_aff.contains(&a) {
                    r.affiliations.insert(
                        author_id(a),
                        BTreeSet::from([format!("I{:04}", author_inst[a])]),
                    );
                }
            }
            r
        })
        .collect();

    let papers = planted
        .iter()
        .map(|p| PaperTruth {
            paper_id: paper_id(p.node),
            field: field_id(nodes[p.node].field.unwrap()),
            year: nodes[p.node].date.unwrap().year(),
            phi_target: p.phi_target,
            phi: p.phi,
            latent: p.latent,
            citations: citations[p.node],
            planted_hit: p.hit,
            topic: p.topic,
        })
        .collect();
    let authors = (0..c.n_authors)
        .map(|a| AuthorTruth {
            author_id: author_id(a),
            team: author_team[a],
            field: field_id(teams[author_team[a]].field),
            proximity: proximity[a],
        })
        .collect();
    let field_betas = (0..c.n_fields)
        .map(|f| (field_id(f), c.beta_for(f)))
        .collect();

    Ok(SynthCorpus {
        records,
        truth: GroundTruth {
            beta: c.beta,
            field_betas,
            papers,
            authors,
            support_papers: support_archive + (nodes.len() - bank_start),
            unmet_demand,
        },
    })
}
