use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pivotscope::careers::{
    career_profiles, collaborator_events, established_authors, events_tsv, match_controls,
    profiles_tsv,
};
use pivotscope::corpus::{ingest_str, Corpus, IngestConfig, ValidationReport};
use pivotscope::metrics::{
    hit_flags, journal_placement, proximity_table, proximity_tsv, resolve_topic, HitParams,
    PlacementParams,
};
use pivotscope::pipeline::{self, col, paper_frame, FrameOptions, ReportOptions};
use pivotscope::pivot::{pivot_table, PivotSelection, PivotWindow};
use pivotscope::stats::{
    binscatter, field_slope_table, group_means, ols_within, residualized_binscatter, slope_trend,
    AnalysisFrame, FeOptions,
};
use pivotscope::synth::{generate, SynthConfig};
use pivotscope::table::parse_list;
use pivotscope::tagger::{
    author_title_proximity, build_relfreq, parse_query, tag, RelFreqParams, WordScoreTable,
    YearRange, COVID_QUERY,
};
use pivotscope::PubDate;
use serde_json::Value;

use crate::args::*;
use crate::manifest::Run;
use crate::Internal;

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Ingest(c) => ingest(c),
        Command::Validate(c) => validate(c),
        Command::Tag(c) => tag_cmd(c),
        Command::Relfreq(c) => relfreq(c),
        Command::Pivot(c) => pivot(c),
        Command::Impact(c) => impact(c),
        Command::Proximity(c) => proximity(c),
        Command::Careers(c) => careers(c),
        Command::Match(c) => match_cmd(c),
        Command::Collab(c) => collab(c),
        Command::Binscatter(c) => binscatter_cmd(c),
        Command::Regress(c) => regress(c),
        Command::Synth(c) => synth(c),
        Command::Report(c) => report(c),
    }
}

/// `FROM` or `FROM:TO`, inclusive.
fn parse_years(s: &str) -> Result<YearRange> {
    let parse = |p: &str| {
        p.trim()
            .parse::<i32>()
            .with_context(|| format!("bad year `{p}` in `{s}`"))
    };
    let range = match s.split_once(':') {
        Some((a, b)) => YearRange::new(parse(a)?, parse(b)?),
        None => YearRange::single(parse(s)?),
    };
    if range.from > range.to {
        bail!("year range `{s}` is reversed");
    }
    Ok(range)
}

fn years_value(r: YearRange) -> Value {
    Value::from(format!("{}:{}", r.from, r.to))
}

/// Factor and column names accept `-` for `_`.
fn column_name(s: &str) -> String {
    s.trim().replace('-', "_")
}

fn column_names(list: &[String]) -> Vec<String> {
    list.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| column_name(s))
        .collect()
}

/// One ID per line; a leading `paper_id` or `author_id` header is skipped so
/// single-column tables written by this tool can be fed back in.
fn read_ids(run: &mut Run, path: &Path) -> Result<BTreeSet<String>> {
    let text = run.read_input(path)?;
    let mut lines = parse_list(&text);
    if matches!(
        lines.first().map(String::as_str),
        Some("paper_id" | "author_id")
    ) {
        lines.remove(0);
    }
    Ok(lines.into_iter().collect())
}

fn load_corpus(run: &mut Run, args: &CorpusArgs) -> Result<(Corpus, ValidationReport)> {
    let text = run.read_input(&args.input)?;
    load_corpus_text(run, &text, &args.filter)
}

fn load_corpus_text(
    run: &mut Run,
    text: &str,
    filter: &FilterArgs,
) -> Result<(Corpus, ValidationReport)> {
    if filter.min_year > filter.max_year {
        bail!("--min-year is after --max-year");
    }
    let config = IngestConfig {
        min_year: filter.min_year,
        max_year: filter.max_year,
    };
    let (raw, mut report) = ingest_str(text, &config);
    let corpus = raw.filter_min_references(filter.min_refs);
    report.record_filter(&raw, &corpus);
    run.config("min_refs", filter.min_refs);
    run.config("min_year", filter.min_year);
    run.config("max_year", filter.max_year);
    run.count("papers", corpus.len());
    run.count("authors", corpus.n_authors());
    run.count("venues", corpus.n_venues());
    run.count("dropped_records", report.dropped_total());
    Ok((corpus, report))
}

fn read_query(run: &mut Run, file: Option<&Path>, inline: Option<&str>) -> Result<String> {
    Ok(match (file, inline) {
        (Some(path), _) => run.read_input(path)?,
        (None, Some(q)) => q.to_string(),
        (None, None) => COVID_QUERY.to_string(),
    })
}

/// Topic paper set from an ID file or a keyword query; the COVID-19 query
/// is used when neither is given and `required` is set.
fn topic_set(
    run: &mut Run,
    corpus: &Corpus,
    args: &TopicArgs,
    required: bool,
) -> Result<Option<BTreeSet<String>>> {
    if let Some(path) = &args.topic {
        let ids = read_ids(run, path)?;
        resolve_topic(corpus, &ids)?;
        run.count("topic_papers", ids.len());
        return Ok(Some(ids));
    }
    if !required && args.query.is_none() && args.query_string.is_none() {
        return Ok(None);
    }
    let text = read_query(run, args.query.as_deref(), args.query_string.as_deref())?;
    let query = parse_query(&text)?;
    let years = args.query_years.as_deref().map(parse_years).transpose()?;
    run.config("query", text.trim());
    if let Some(r) = years {
        run.config("query_years", years_value(r));
    }
    let ids = tag(corpus, &query, years);
    run.count("topic_papers", ids.len());
    Ok(Some(ids))
}

fn frame_options(
    run: &mut Run,
    args: &FrameArgs,
    topic: Option<BTreeSet<String>>,
) -> Result<FrameOptions> {
    if !(args.hit_quantile > 0.0 && args.hit_quantile < 1.0) {
        bail!("--hit-quantile must be strictly between 0 and 1");
    }
    let horizon = match &args.horizon {
        Some(s) => Some(
            PubDate::parse(s)
                .with_context(|| format!("bad --horizon date `{s}`"))?
                .date,
        ),
        None => None,
    };
    let years = parse_years(&args.placement_years)?;
    let window: PivotWindow = args.window.into();
    run.config("window", window.label());
    run.config("min_group", args.min_group);
    run.config("hit_quantile", args.hit_quantile);
    if let Some(h) = &args.horizon {
        run.config("horizon", h.as_str());
    }
    run.config("placement_years", years_value(years));
    run.config("placement_min_papers", args.placement_min_papers);
    run.config("placement_pooled", args.placement_pooled);
    Ok(FrameOptions {
        window,
        hit: HitParams {
            p: args.hit_quantile,
            min_group: args.min_group,
        },
        horizon,
        placement: PlacementParams {
            years,
            min_year_papers: args.placement_min_papers,
            pooled: args.placement_pooled,
        },
        topic,
    })
}

fn fe_options(run: &mut Run, tolerance: f64, max_iter: usize) -> Result<FeOptions> {
    if tolerance.is_nan() || tolerance < 0.0 || max_iter == 0 {
        bail!("--fe-tolerance must be nonnegative and --fe-max-iter positive");
    }
    run.config("fe_tolerance", tolerance);
    run.config("fe_max_iter", max_iter);
    Ok(FeOptions {
        tolerance,
        max_iter,
    })
}

fn established(run: &mut Run, corpus: &Corpus, args: &EstablishedArgs) -> BTreeSet<String> {
    run.config("min_pubs", args.min_pubs);
    run.config("established_by", args.established_by);
    let set = established_authors(corpus, args.min_pubs, args.established_by);
    run.count("established_authors", set.len());
    set
}

fn ingest(c: &CorpusCmd) -> Result<()> {
    let mut run = Run::new("ingest", &c.out.output_dir)?;
    let (corpus, report) = load_corpus(&mut run, &c.corpus)?;
    run.write("corpus.jsonl", &corpus.to_jsonl())?;
    run.write("validation.tsv", &report.to_tsv())?;
    run.write("summary.tsv", &corpus.summary_tsv())?;
    run.finish()
}

fn validate(c: &CorpusCmd) -> Result<()> {
    let mut run = Run::new("validate", &c.out.output_dir)?;
    let (corpus, report) = load_corpus(&mut run, &c.corpus)?;
    run.write("validation.tsv", &report.to_tsv())?;
    run.write("summary.tsv", &corpus.summary_tsv())?;
    run.finish()
}

fn id_table(header: &str, ids: &BTreeSet<String>) -> String {
    let mut out = format!("{header}\n");
    for id in ids {
        out.push_str(id);
        out.push('\n');
    }
    out
}

fn tag_cmd(c: &TagCmd) -> Result<()> {
    let mut run = Run::new("tag", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let topic = TopicArgs {
        topic: None,
        query: c.query.clone(),
        query_string: c.query_string.clone(),
        query_years: c.years.clone(),
    };
    let ids = topic_set(&mut run, &corpus, &topic, true)?.unwrap_or_default();
    run.write("topic.tsv", &id_table("paper_id", &ids))?;
    run.finish()
}

fn relfreq(c: &RelfreqCmd) -> Result<()> {
    let mut run = Run::new("relfreq", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let topic = topic_set(&mut run, &corpus, &c.topic, true)?.unwrap_or_default();
    let exclusions = match &c.exclusions {
        Some(path) => parse_list(&run.read_input(path)?),
        None => Vec::new(),
    };
    let params = RelFreqParams {
        min_topic_papers: c.min_topic_papers,
        top_k: c.top_k,
    };
    run.config("year", c.year);
    run.config("min_topic_papers", c.min_topic_papers);
    run.config("top_k", c.top_k);
    let table = build_relfreq(&corpus, &topic, c.year, &params, &exclusions)?;
    run.count("words", table.len());
    run.write("relfreq.tsv", &table.to_tsv())?;
    run.finish()
}

fn pivot(c: &PivotCmd) -> Result<()> {
    let mut run = Run::new("pivot", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let window: PivotWindow = c.window.into();
    run.config("window", window.label());
    let years = c.years.as_deref().map(parse_years).transpose()?;
    if let Some(r) = years {
        run.config("years", years_value(r));
    }
    let authors = match &c.authors {
        Some(path) => {
            let ids = read_ids(&mut run, path)?;
            for id in &ids {
                corpus.author_idx(id)?;
            }
            Some(ids)
        }
        None => None,
    };
    let table = pivot_table(&corpus, window, &PivotSelection { years, authors });
    run.count("author_rows", table.author_rows.len());
    run.count("paper_rows", table.paper_rows.len());
    run.count(
        "defined_papers",
        table
            .paper_rows
            .iter()
            .filter(|r| r.result.value().is_some())
            .count(),
    );
    run.write("pivot_authors.tsv", &table.author_tsv(&corpus))?;
    run.write("pivot_papers.tsv", &table.paper_tsv(&corpus))?;
    run.finish()
}

fn impact(c: &ImpactCmd) -> Result<()> {
    let mut run = Run::new("impact", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let opts = frame_options(&mut run, &c.frame, None)?;
    let Some(horizon) = opts.horizon.or_else(|| corpus.max_date()) else {
        bail!("corpus is empty");
    };
    let hits = hit_flags(&corpus, horizon, opts.hit);
    let placement = journal_placement(&corpus, &hits, &opts.placement);
    let flags: Vec<bool> = (0..corpus.len() as u32)
        .filter_map(|p| hits.entry(p).hit())
        .collect();
    run.count("defined_hit_flags", flags.len());
    run.count("hits", flags.iter().filter(|&&h| h).count());
    run.write("hits.tsv", &hits.to_tsv(&corpus))?;
    run.write("hit_groups.tsv", &hits.groups_tsv())?;
    run.write("placement.tsv", &placement.to_tsv(&corpus))?;
    run.finish()
}

fn proximity(c: &ProximityCmd) -> Result<()> {
    let mut run = Run::new("proximity", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let topic = topic_set(&mut run, &corpus, &c.topic, true)?.unwrap_or_default();
    let topic_idx = resolve_topic(&corpus, &topic)?;
    let ids = match &c.authors {
        Some(path) => read_ids(&mut run, path)?,
        None => established(&mut run, &corpus, &c.established),
    };
    let authors: Vec<u32> = ids
        .iter()
        .map(|id| corpus.author_idx(id))
        .collect::<pivotscope::Result<_>>()?;
    run.config("cutoff", c.cutoff);
    let rows = proximity_table(&corpus, &authors, &topic_idx, c.cutoff);
    let titles = match &c.relfreq {
        Some(path) => {
            let table = WordScoreTable::from_tsv(&run.read_input(path)?)?;
            Some(
                ids.iter()
                    .map(|id| author_title_proximity(&corpus, id, &table, c.cutoff))
                    .collect::<pivotscope::Result<Vec<_>>>()?,
            )
        }
        None => None,
    };
    run.count("rows", rows.len());
    run.write(
        "proximity.tsv",
        &proximity_tsv(&corpus, &rows, titles.as_deref()),
    )?;
    run.finish()
}

fn careers(c: &CareersCmd) -> Result<()> {
    let mut run = Run::new("careers", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let window = parse_years(&c.career_window)?;
    run.config("career_window", years_value(window));
    let est = established(&mut run, &corpus, &c.established);
    let profiles = career_profiles(&corpus, &est, window)?;
    run.write("established.tsv", &id_table("author_id", &est))?;
    run.write("profiles.tsv", &profiles_tsv(&profiles))?;
    run.finish()
}

fn match_cmd(c: &MatchCmd) -> Result<()> {
    let mut run = Run::new("match", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let window = parse_years(&c.career_window)?;
    run.config("career_window", years_value(window));
    let est = established(&mut run, &corpus, &c.established);
    let treated: BTreeSet<String> = match &c.treated {
        Some(path) => read_ids(&mut run, path)?,
        None => {
            let topic = topic_set(&mut run, &corpus, &c.topic, true)?.unwrap_or_default();
            let mut set = BTreeSet::new();
            for p in resolve_topic(&corpus, &topic)? {
                for &a in corpus.paper_authors(p) {
                    let id = corpus.author_id(a);
                    if est.contains(id) {
                        set.insert(id.to_string());
                    }
                }
            }
            set
        }
    };
    let pool: BTreeSet<String> = est.difference(&treated).cloned().collect();
    let everyone: BTreeSet<String> = treated
        .iter()
        .filter(|id| corpus.author_idx(id).is_ok())
        .chain(&pool)
        .cloned()
        .collect();
    let profiles = career_profiles(&corpus, &everyone, window)?;
    let matching = match_controls(&treated, &pool, &profiles)?;
    run.count("treated", treated.len());
    run.count("pool", pool.len());
    run.count("matched", matching.pairs.len());
    run.count("unmatched", matching.unmatched.len());
    run.write("matching.tsv", &matching.to_tsv())?;
    run.write("unmatched.tsv", &matching.unmatched_tsv())?;
    run.finish()
}

fn collab(c: &CollabCmd) -> Result<()> {
    let mut run = Run::new("collab", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let est = established(&mut run, &corpus, &c.established);
    let authors = match &c.authors {
        Some(path) => read_ids(&mut run, path)?,
        None => est.clone(),
    };
    let events = collaborator_events(&corpus, &authors, &est)?;
    run.count("events", events.len());
    run.write("collaborators.tsv", &events_tsv(&events))?;
    run.finish()
}

/// The frame to analyse: read from a file, or built from a corpus.
fn load_frame(
    run: &mut Run,
    source: &SourceArgs,
    filter: &FilterArgs,
    opts: &FrameArgs,
) -> Result<AnalysisFrame> {
    if let Some(path) = &source.frame {
        let frame = AnalysisFrame::from_tsv(&run.read_input(path)?)?;
        run.count("rows", frame.len());
        return Ok(frame);
    }
    let path = source
        .input
        .as_ref()
        .expect("clap requires --input or --frame");
    let text = run.read_input(path)?;
    let (corpus, _) = load_corpus_text(run, &text, filter)?;
    let opts = frame_options(run, opts, None)?;
    Ok(paper_frame(&corpus, &opts)?.frame)
}

fn binscatter_cmd(c: &BinscatterCmd) -> Result<()> {
    let mut run = Run::new("binscatter", &c.out.output_dir)?;
    let frame = load_frame(&mut run, &c.source, &c.filter, &c.frame_opts)?;
    let (x, y) = (column_name(&c.x), column_name(&c.y));
    let factors = column_names(&c.fe);
    let fe = fe_options(&mut run, c.fe_tolerance, c.fe_max_iter)?;
    run.config("x", x.as_str());
    run.config("y", y.as_str());
    run.config("bins", c.bins);
    run.config("fe", factors.join(","));
    let table = if factors.is_empty() {
        binscatter(&frame, &x, &y, c.bins)?
    } else {
        let refs: Vec<&str> = factors.iter().map(String::as_str).collect();
        residualized_binscatter(&frame, &x, &y, &refs, c.bins, fe)?
    };
    run.count("dropped_rows", table.dropped);
    run.write("binscatter.tsv", &table.to_tsv())?;
    run.finish()
}

fn regress(c: &RegressCmd) -> Result<()> {
    let mut run = Run::new("regress", &c.out.output_dir)?;
    let frame = load_frame(&mut run, &c.source, &c.filter, &c.frame_opts)?;
    let (x, y) = (column_name(&c.x), column_name(&c.y));
    let factors = column_names(&c.fe);
    let refs: Vec<&str> = factors.iter().map(String::as_str).collect();
    let fe = fe_options(&mut run, c.fe_tolerance, c.fe_max_iter)?;
    run.config("x", x.as_str());
    run.config("y", y.as_str());
    run.config("fe", factors.join(","));
    let fit = ols_within(&frame, &y, &x, &refs, fe)?;
    run.count("n", fit.n);
    run.count("dropped_rows", fit.dropped);
    run.write("regression.tsv", &fit.to_tsv())?;
    if let Some(by) = &c.by {
        let by = column_name(by);
        run.config("by", by.as_str());
        run.config("min_papers", c.min_papers);
        let table = field_slope_table(&frame, &by, &y, &x, c.min_papers)?;
        run.count("qualifying_groups", table.qualifying());
        run.count("negative_groups", table.negative());
        run.write("field_slopes.tsv", &table.to_tsv())?;
    }
    if c.trend {
        let year = column_name(&c.year);
        run.config("trend_year", year.as_str());
        let trend = slope_trend(&frame, &y, &x, &year)?;
        run.write("slope_trend.tsv", &trend.fit.to_tsv())?;
    }
    run.finish()
}

fn synth(c: &SynthCmd) -> Result<()> {
    let mut run = Run::new("synth", &c.out.output_dir)?;
    let mut config: SynthConfig = match &c.config {
        Some(path) => {
            let text = run.read_input(path)?;
            serde_json::from_str(&text).with_context(|| format!("bad config {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    config.seed = c.seed;
    if let Some(n) = c.n_authors {
        config.n_authors = n;
    }
    if let Some(n) = c.n_venues {
        config.n_venues = n;
    }
    if let Some(n) = c.n_fields {
        config.n_fields = n;
    }
    if let Some(b) = c.beta {
        config.beta = b;
    }
    let synth = generate(&config)?;
    let config_json = serde_json::to_value(&config).map_err(|e| Internal(e.to_string()))?;
    if let Value::Object(map) = &config_json {
        for (k, v) in map {
            run.config(k, v.clone());
        }
    }
    run.count("papers", synth.truth.papers.len());
    run.count("records", synth.records.len());
    run.count("authors", synth.truth.authors.len());
    let mut config_text =
        serde_json::to_string_pretty(&config_json).map_err(|e| Internal(e.to_string()))?;
    config_text.push('\n');
    run.write("corpus.jsonl", &synth.to_jsonl())?;
    run.write("truth_papers.tsv", &synth.truth.papers_tsv())?;
    run.write("truth_authors.tsv", &synth.truth.authors_tsv())?;
    run.write("truth_summary.tsv", &synth.truth.summary_tsv())?;
    run.write("synth_config.json", &config_text)?;
    run.finish()
}

fn report(c: &ReportCmd) -> Result<()> {
    let mut run = Run::new("report", &c.out.output_dir)?;
    let (corpus, _) = load_corpus(&mut run, &c.corpus)?;
    let topic = topic_set(&mut run, &corpus, &c.topic, false)?;
    let has_topic = topic.is_some();
    let frame = frame_options(&mut run, &c.frame, topic)?;
    let fe = fe_options(&mut run, c.fe_tolerance, c.fe_max_iter)?;
    let opts = ReportOptions {
        frame,
        impact: column_name(&c.impact),
        factors: column_names(&c.fe),
        bins: c.bins,
        fe,
    };
    run.config("impact", opts.impact.as_str());
    run.config("bins", opts.bins);
    run.config("fe", opts.factors.join(","));
    let out = pipeline::report(&corpus, &opts)?;
    let a = &out.analysis;
    run.count("pivot_defined_papers", a.pivots.paper_values().len());
    run.count("regression_n", out.slope.n);
    run.write("frame.tsv", &a.frame.to_tsv())?;
    run.write("pivot_authors.tsv", &a.pivots.author_tsv(&corpus))?;
    run.write("pivot_papers.tsv", &a.pivots.paper_tsv(&corpus))?;
    run.write("hits.tsv", &a.hits.to_tsv(&corpus))?;
    run.write("hit_groups.tsv", &a.hits.groups_tsv())?;
    run.write("placement.tsv", &a.placement.to_tsv(&corpus))?;
    run.write("binscatter.tsv", &out.bins.to_tsv())?;
    run.write("regression.tsv", &out.slope.to_tsv())?;
    if has_topic {
        for value in [col::PIVOT, col::TEAM_SIZE, col::NEW_COLLABORATIONS] {
            let overall = group_means(&a.frame, value, &[col::TOPIC])?;
            run.write(&format!("topic_{value}.tsv"), &overall.to_tsv())?;
            let by_field = group_means(&a.frame, value, &[col::FIELD, col::TOPIC])?;
            run.write(&format!("field_topic_{value}.tsv"), &by_field.to_tsv())?;
        }
    }
    run.finish()
}
