//! Boolean keyword queries over title+abstract, and relative-frequency word
//! scores for title-based topic proximity.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::corpus::{Corpus, PaperIdx};
use crate::error::{Error, Result};
use crate::par;
use crate::table::{num, Table, TsvWriter};

/// The keyword query used to tag COVID-19 papers.
pub const COVID_QUERY: &str = r#""2019-nCoV" OR "COVID-19" OR "SARS-CoV-2" OR "HCoV-2019" OR "hcov" OR "NCOVID-19" OR "severe acute respiratory syndrome coronavirus 2" OR "severe acute respiratory syndrome corona virus 2" OR (("coronavirus" OR "corona virus") AND (Wuhan OR China OR novel))"#;

/// Lowercases and splits on every non-alphanumeric character.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Title tokenizer for word scoring: normalized tokens of at least two chars.
pub fn title_words(title: &str) -> Vec<String> {
    normalize_tokens(title)
        .into_iter()
        .filter(|t| t.chars().count() >= 2)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicQuery {
    Phrase { text: String, tokens: Vec<String> },
    And(Vec<TopicQuery>),
    Or(Vec<TopicQuery>),
}

impl TopicQuery {
    pub fn phrase(text: &str) -> Result<Self> {
        let tokens = normalize_tokens(text);
        if tokens.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "phrase {text:?} is empty after normalization"
            )));
        }
        Ok(TopicQuery::Phrase {
            text: text.to_string(),
            tokens,
        })
    }

    /// Evaluates against a normalized token stream. A phrase matches when
    /// its tokens occur contiguously.
    pub fn matches(&self, tokens: &[String]) -> bool {
        match self {
            TopicQuery::Phrase { tokens: needle, .. } => {
                tokens.windows(needle.len()).any(|w| w == needle.as_slice())
            }
            TopicQuery::And(children) => children.iter().all(|c| c.matches(tokens)),
            TopicQuery::Or(children) => children.iter().any(|c| c.matches(tokens)),
        }
    }

    pub fn matches_text(&self, text: &str) -> bool {
        self.matches(&normalize_tokens(text))
    }
}

impl fmt::Display for TopicQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, op: &str, children: &[TopicQuery]| {
            write!(f, "(")?;
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        };
        match self {
            TopicQuery::Phrase { text, .. } => write!(f, "{text:?}"),
            TopicQuery::And(c) => join(f, "AND", c),
            TopicQuery::Or(c) => join(f, "OR", c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Phrase(String),
    Word(String),
    And,
    Or,
    Open,
    Close,
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push((pos, Tok::Open));
            }
            ')' => {
                chars.next();
                out.push((pos, Tok::Close));
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    text.push(c);
                }
                if !closed {
                    return Err(Error::QueryParse {
                        position: pos,
                        message: "unterminated quote".into(),
                    });
                }
                out.push((pos, Tok::Phrase(text)));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let tok = match word.to_ascii_uppercase().as_str() {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    _ => Tok::Word(word),
                };
                out.push((pos, tok));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::QueryParse {
            position: self.here(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<TopicQuery> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            TopicQuery::Or(terms)
        })
    }

    fn term(&mut self) -> Result<TopicQuery> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            TopicQuery::And(factors)
        })
    }

    fn factor(&mut self) -> Result<TopicQuery> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Phrase(text)) | Some(Tok::Word(text)) => {
                self.pos += 1;
                TopicQuery::phrase(&text).map_err(|_| Error::QueryParse {
                    position: at,
                    message: format!("phrase {text:?} has no searchable characters"),
                })
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::QueryParse {
                        position: at,
                        message: "unbalanced parenthesis".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Close) => self.err("unexpected ')'"),
            Some(Tok::And) | Some(Tok::Or) => self.err("operator without left operand"),
            None => self.err("unexpected end of query"),
        }
    }
}

/// Parses quoted phrases, bare words, `AND`, `OR` and parentheses.
/// `AND` binds tighter than `OR`; operators are case-insensitive.
pub fn parse_query(text: &str) -> Result<TopicQuery> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let q = p.expr()?;
    match p.peek() {
        None => Ok(q),
        Some(Tok::Close) => p.err("unbalanced parenthesis"),
        Some(_) => p.err("expected AND, OR or end of query"),
    }
}

/// Inclusive publication-year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub from: i32,
    pub to: i32,
}

impl YearRange {
    pub fn new(from: i32, to: i32) -> Self {
        Self { from, to }
    }

    pub fn single(year: i32) -> Self {
        Self {
            from: year,
            to: year,
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.from..=self.to).contains(&year)
    }
}

fn searchable_tokens(corpus: &Corpus, idx: PaperIdx) -> Vec<String> {
    let p = corpus.paper(idx);
    let mut tokens = normalize_tokens(&p.title);
    if let Some(a) = &p.abstract_text {
        tokens.extend(normalize_tokens(a));
    }
    tokens
}

/// Papers whose title+abstract satisfy the query, optionally limited by year.
pub fn tag(corpus: &Corpus, query: &TopicQuery, years: Option<YearRange>) -> BTreeSet<String> {
    let hits = par::map_range(corpus.len(), |i| {
        let idx = i as PaperIdx;
        if let Some(r) = years {
            if !r.contains(corpus.year(idx)) {
                return false;
            }
        }
        query.matches(&searchable_tokens(corpus, idx))
    });
    hits.iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(i, _)| corpus.paper(i as PaperIdx).paper_id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelFreqParams {
    pub min_topic_papers: usize,
    pub top_k: usize,
}

impl Default for RelFreqParams {
    fn default() -> Self {
        Self {
            min_topic_papers: 20,
            top_k: 500,
        }
    }
}

/// Provenance of a built table; absent when loaded from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct RelFreqMeta {
    pub params: RelFreqParams,
    pub year: i32,
    pub topic_papers: usize,
    pub nontopic_papers: usize,
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordScoreTable {
    entries: Vec<(String, f64)>,
    lookup: HashMap<String, f64>,
    pub meta: Option<RelFreqMeta>,
}

impl WordScoreTable {
    fn from_entries(mut entries: Vec<(String, f64)>, meta: Option<RelFreqMeta>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let lookup = entries.iter().cloned().collect();
        Self {
            entries,
            lookup,
            meta,
        }
    }

    /// Entries sorted by score descending, then word.
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.lookup.get(word).copied()
    }

    pub fn to_tsv(&self) -> String {
        let mut w = TsvWriter::new(&["word", "score"]);
        for (word, s) in &self.entries {
            w.row([word.clone(), num(*s)]);
        }
        w.finish()
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let t = Table::parse(text)?;
        let wi = t.column_index("word")?;
        let si = t.column_index("score")?;
        let mut entries = Vec::with_capacity(t.rows.len());
        for (i, row) in t.rows.iter().enumerate() {
            let s: f64 = row[si].parse().map_err(|_| Error::Table {
                line: i + 2,
                message: format!("bad score {:?}", row[si]),
            })?;
            entries.push((row[wi].clone(), s));
        }
        Ok(Self::from_entries(entries, None))
    }
}

/// The smoothed ratio of document frequencies:
/// `((n_topic + 1) / N_topic) / ((n_other + 1) / N_other)`.
pub fn relfreq_score(
    n_topic: usize,
    topic_total: usize,
    n_other: usize,
    other_total: usize,
) -> f64 {
    let topic = (n_topic as f64 + 1.0) / topic_total as f64;
    let other = (n_other as f64 + 1.0) / other_total as f64;
    topic / other
}

/// Scores title words of one year's papers by how much more often they
/// appear in topic titles than in the rest. Counts are per paper (presence),
/// not per occurrence.
pub fn build_relfreq(
    corpus: &Corpus,
    topic: &BTreeSet<String>,
    year: i32,
    params: &RelFreqParams,
    exclusions: &[String],
) -> Result<WordScoreTable> {
    if topic.is_empty() {
        return Err(Error::InvalidArgument("topic set is empty".into()));
    }
    let mut topic_idx = HashSet::with_capacity(topic.len());
    for id in topic {
        let idx = corpus.paper_idx(id)?;
        if corpus.year(idx) != year {
            return Err(Error::InvalidArgument(format!(
                "topic paper {id} is not from analysis year {year}"
            )));
        }
        topic_idx.insert(idx);
    }

    let year_papers: Vec<PaperIdx> = (0..corpus.len() as PaperIdx)
        .filter(|&i| corpus.year(i) == year)
        .collect();
    let n_topic_total = topic_idx.len();
    let n_other_total = year_papers.len() - n_topic_total;
    if n_other_total == 0 {
        return Err(Error::InvalidArgument(format!(
            "no non-topic papers in year {year}"
        )));
    }

    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for &idx in &year_papers {
        let words: BTreeSet<String> = title_words(&corpus.paper(idx).title).into_iter().collect();
        let is_topic = topic_idx.contains(&idx);
        for w in words {
            let e = counts.entry(w).or_default();
            if is_topic {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }

    let mut scored: Vec<(String, f64)> = counts
        .into_iter()
        .filter(|(_, (t, _))| *t >= params.min_topic_papers)
        .map(|(w, (t, o))| {
            let s = relfreq_score(t, n_topic_total, o, n_other_total);
            (w, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(params.top_k);

    let excluded: BTreeSet<String> = exclusions.iter().map(|w| w.trim().to_lowercase()).collect();
    scored.retain(|(w, _)| !excluded.contains(w));

    Ok(WordScoreTable::from_entries(
        scored,
        Some(RelFreqMeta {
            params: params.clone(),
            year,
            topic_papers: n_topic_total,
            nontopic_papers: n_other_total,
            excluded: excluded.into_iter().collect(),
        }),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TitleScore {
    pub score: f64,
    /// Number of token occurrences found in the table.
    pub covered: usize,
}

impl TitleScore {
    pub fn has_coverage(&self) -> bool {
        self.covered > 0
    }
}

/// Mean score over the title's token occurrences that the table knows
/// about; 0 with `covered == 0` when none do.
pub fn score_title(title: &str, table: &WordScoreTable) -> TitleScore {
    let mut sum = 0.0;
    let mut covered = 0;
    for w in title_words(title) {
        if let Some(s) = table.score(&w) {
            sum += s;
            covered += 1;
        }
    }
    TitleScore {
        score: if covered == 0 {
            0.0
        } else {
            sum / covered as f64
        },
        covered,
    }
}

/// Mean title score over an author's papers published before `cutoff_year`.
pub fn author_title_proximity(
    corpus: &Corpus,
    author_id: &str,
    table: &WordScoreTable,
    cutoff_year: i32,
) -> Result<Option<f64>> {
    let a = corpus.author_idx(author_id)?;
    let scores: Vec<f64> = corpus
        .author_papers(a)
        .iter()
        .filter(|&&p| corpus.year(p) < cutoff_year)
        .map(|&p| score_title(&corpus.paper(p).title, table).score)
        .collect();
    if scores.is_empty() {
        return Ok(None);
    }
    Ok(Some(scores.iter().sum::<f64>() / scores.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_str, IngestConfig};

    fn ph(s: &str) -> TopicQuery {
        TopicQuery::phrase(s).unwrap()
    }

    #[test]
    fn parses_or_of_phrases() {
        assert_eq!(
            parse_query(r#""a" OR "b""#).unwrap(),
            TopicQuery::Or(vec![ph("a"), ph("b")])
        );
    }

    #[test]
    fn parens_override_precedence() {
        let q = parse_query(r#"("x" OR "y") AND "z""#).unwrap();
        assert_eq!(
            q,
            TopicQuery::And(vec![TopicQuery::Or(vec![ph("x"), ph("y")]), ph("z")])
        );
        let q = parse_query(r#""x" OR "y" AND "z""#).unwrap();
        assert_eq!(
            q,
            TopicQuery::Or(vec![ph("x"), TopicQuery::And(vec![ph("y"), ph("z")])])
        );
    }

    #[test]
    fn covid_query_structure() {
        let q = parse_query(COVID_QUERY).unwrap();
        let TopicQuery::Or(branches) = &q else {
            panic!("top level must be Or")
        };
        assert_eq!(branches.len(), 9);
        assert_eq!(
            branches.last().unwrap(),
            &TopicQuery::And(vec![
                TopicQuery::Or(vec![ph("coronavirus"), ph("corona virus")]),
                TopicQuery::Or(vec![ph("Wuhan"), ph("China"), ph("novel")]),
            ])
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_query(r#""a" OR "b"#) {
            Err(Error::QueryParse { position, .. }) => assert_eq!(position, 7),
            other => panic!("{other:?}"),
        }
        match parse_query(r#"("a" OR "b""#) {
            Err(Error::QueryParse { position, .. }) => assert_eq!(position, 0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_query(r#""a")"#),
            Err(Error::QueryParse { position: 3, .. })
        ));
        assert!(parse_query(r#""a" "b""#).is_err());
        assert!(parse_query("").is_err());
        assert!(parse_query(r#""--""#).is_err());
    }

    #[test]
    fn phrase_matching_respects_token_boundaries() {
        let q = ph("hcov");
        assert!(q.matches_text("HCoV-2019 outbreak"));
        assert!(!q.matches_text("hcovid cases"));
        assert!(ph("COVID-19").matches_text("covid 19"));
        assert!(ph("corona virus").matches_text("A Corona-Virus in bats"));
    }

    #[test]
    fn covid_tagging_examples() {
        let q = parse_query(COVID_QUERY).unwrap();
        assert!(q.matches_text("COVID-19 and policy"));
        assert!(!q.matches_text("coronavirus replication"));
        assert!(q.matches_text("coronavirus replication in Wuhan"));
        assert!(!q.matches_text(""));
    }

    #[test]
    fn tag_uses_abstract_and_year_filter() {
        let text = [
            r#"{"paper_id":"a","title":"Policy notes","abstract":"on SARS-CoV-2","pub_date":"2020-03-01"}"#,
            r#"{"paper_id":"b","title":"COVID-19 and policy","pub_date":"2019-03-01"}"#,
            r#"{"paper_id":"c","title":"","pub_date":"2020-03-01"}"#,
        ]
        .join("\n");
        let (c, _) = ingest_str(&text, &IngestConfig::default());
        let q = parse_query(COVID_QUERY).unwrap();
        let tagged = tag(&c, &q, Some(YearRange::single(2020)));
        assert_eq!(
            tagged.into_iter().collect::<Vec<_>>(),
            vec!["a".to_string()]
        );
        assert_eq!(tag(&c, &q, None).len(), 2);
    }

    #[test]
    fn relfreq_formula_hand_values() {
        let s = relfreq_score(3, 10, 5, 100);
        assert!((s - 20.0 / 3.0).abs() <= 1e-12);
        assert_eq!(relfreq_score(10, 10, 10, 10), 1.0);
    }

    fn year_corpus(topic_titles: &[&str], other_titles: &[&str]) -> (Corpus, BTreeSet<String>) {
        let mut lines = Vec::new();
        let mut topic = BTreeSet::new();
        for (i, t) in topic_titles.iter().enumerate() {
            let id = format!("t{i:03}");
            topic.insert(id.clone());
            lines.push(
                serde_json::json!({"paper_id": id, "title": t, "pub_date": "2020-01-01"})
                    .to_string(),
            );
        }
        for (i, t) in other_titles.iter().enumerate() {
            lines.push(
                serde_json::json!({"paper_id": format!("o{i:03}"), "title": t, "pub_date": "2020-01-01"})
                    .to_string(),
            );
        }
        let (c, _) = ingest_str(&lines.join("\n"), &IngestConfig::default());
        (c, topic)
    }

    #[test]
    fn build_relfreq_counts_presence_and_excludes() {
        // "virus" in 3 of 10 topic titles (one title repeats it) and 5 of 100 others.
        let mut topic = vec!["virus virus virus"; 1];
        topic.extend(vec!["virus outbreak"; 2]);
        topic.extend(vec!["princess ship"; 7]);
        let mut other = vec!["virus genome"; 5];
        other.extend(vec!["plain study"; 95]);
        let (c, t) = year_corpus(&topic, &other);
        let params = RelFreqParams {
            min_topic_papers: 2,
            top_k: 500,
        };
        let table = build_relfreq(&c, &t, 2020, &params, &[]).unwrap();
        assert!((table.score("virus").unwrap() - 20.0 / 3.0).abs() <= 1e-12);
        assert!(table.score("princess").is_some());
        assert!(table.score("genome").is_none(), "below min_topic_papers");

        let table = build_relfreq(&c, &t, 2020, &params, &["Princess".into()]).unwrap();
        assert!(table.score("princess").is_none());
        assert!(table.entries().windows(2).all(|w| w[0].1 >= w[1].1));

        let top1 = RelFreqParams {
            min_topic_papers: 2,
            top_k: 1,
        };
        assert_eq!(build_relfreq(&c, &t, 2020, &top1, &[]).unwrap().len(), 1);
    }

    #[test]
    fn build_relfreq_errors() {
        let (c, t) = year_corpus(&["a b"], &[]);
        assert!(build_relfreq(&c, &BTreeSet::new(), 2020, &RelFreqParams::default(), &[]).is_err());
        assert!(build_relfreq(&c, &t, 2020, &RelFreqParams::default(), &[]).is_err());
        assert!(build_relfreq(&c, &t, 2019, &RelFreqParams::default(), &[]).is_err());
    }

    fn table(entries: &[(&str, f64)]) -> WordScoreTable {
        WordScoreTable::from_entries(
            entries.iter().map(|(w, s)| (w.to_string(), *s)).collect(),
            None,
        )
    }

    #[test]
    fn title_scores() {
        let t = table(&[("spike", 6.0), ("protein", 2.0)]);
        assert_eq!(score_title("Spike protein", &t).score, 4.0);
        assert_eq!(score_title("spike of a", &t).score, 6.0);
        let none = score_title("nothing here", &t);
        assert_eq!(none.score, 0.0);
        assert!(!none.has_coverage());
        // occurrences count
        assert_eq!(score_title("spike spike protein", &t).score, 14.0 / 3.0);
    }

    #[test]
    fn table_tsv_roundtrip() {
        let t = table(&[("b", 2.0), ("a", 2.0), ("c", 0.1)]);
        let text = t.to_tsv();
        assert_eq!(text, "word\tscore\na\t2\nb\t2\nc\t0.1\n");
        assert_eq!(
            WordScoreTable::from_tsv(&text).unwrap().entries(),
            t.entries()
        );
    }

    #[test]
    fn author_proximity_means_pre_cutoff_papers() {
        let text = [
            r#"{"paper_id":"p1","title":"spike","pub_date":"2018-01-01","author_ids":["A","B"]}"#,
            r#"{"paper_id":"p2","title":"protein","pub_date":"2019-01-01","author_ids":["A"]}"#,
            r#"{"paper_id":"p3","title":"spike","pub_date":"2020-01-01","author_ids":["A","C"]}"#,
            r#"{"paper_id":"p4","title":"unrelated","pub_date":"2019-01-01","author_ids":["D"]}"#,
        ]
        .join("\n");
        let (c, _) = ingest_str(&text, &IngestConfig::default());
        let t = table(&[("spike", 4.0), ("protein", 2.0)]);
        assert_eq!(
            author_title_proximity(&c, "A", &t, 2020).unwrap(),
            Some(3.0)
        );
        assert_eq!(author_title_proximity(&c, "C", &t, 2020).unwrap(), None);
        assert_eq!(
            author_title_proximity(&c, "D", &t, 2020).unwrap(),
            Some(0.0)
        );
        assert!(author_title_proximity(&c, "Z", &t, 2020).is_err());
    }
}
