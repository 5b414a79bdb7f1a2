use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pivotscope::pivot::PivotWindow;

#[derive(Debug, Parser)]
#[command(
    name = "pivotscope",
    version,
    about = "Pivot-size and impact analytics over bibliographic corpora"
)]
pub struct Cli {
    /// Worker threads (0 = one per core). Outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read, validate and filter a corpus; write the cleaned corpus.
    Ingest(CorpusCmd),
    /// Validation counts and summary only.
    Validate(CorpusCmd),
    /// Tag topic papers with a keyword query.
    Tag(TagCmd),
    /// Title-word relative frequency table for a topic.
    Relfreq(RelfreqCmd),
    /// Per-author pivot sizes.
    Pivot(PivotCmd),
    /// Hit flags, group diagnostics and journal placement.
    Impact(ImpactCmd),
    /// Citation and title proximity of authors to a topic.
    Proximity(ProximityCmd),
    /// Established authors and career profiles.
    Careers(CareersCmd),
    /// Matched controls for treated authors.
    Match(MatchCmd),
    /// New established collaborators per paper.
    Collab(CollabCmd),
    /// Binned scatterplot table, optionally residualized on fixed effects.
    Binscatter(BinscatterCmd),
    /// Within-fixed-effect slope, per-field slopes and slope trend.
    Regress(RegressCmd),
    /// Seeded synthetic corpus with ground truth.
    Synth(SynthCmd),
    /// Paper frame, pivot, impact, residualized binscatter and slope.
    Report(ReportCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    ThreeYear,
    FullCareer,
}

impl From<WindowArg> for PivotWindow {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::ThreeYear => PivotWindow::ThreeYear,
            WindowArg::FullCareer => PivotWindow::FullCareer,
        }
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Drop papers with fewer references than this.
    #[arg(long, default_value_t = 5)]
    pub min_refs: usize,
    /// Earliest publication year kept at ingest.
    #[arg(long, default_value_t = 1900)]
    pub min_year: i32,
    /// Latest publication year kept at ingest.
    #[arg(long, default_value_t = 2100)]
    pub max_year: i32,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus in JSON-lines format.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long)]
    pub output_dir: PathBuf,
}

/// Ways to name the topic paper set.
#[derive(Debug, Args)]
pub struct TopicArgs {
    /// File of topic paper IDs, one per line.
    #[arg(long, conflicts_with_all = ["query", "query_string"])]
    pub topic: Option<PathBuf>,
    /// File holding a keyword query.
    #[arg(long, conflicts_with = "query_string")]
    pub query: Option<PathBuf>,
    /// Keyword query given inline.
    #[arg(long)]
    pub query_string: Option<String>,
    /// Restrict query matches to FROM or FROM:TO publication years.
    #[arg(long, value_name = "FROM[:TO]")]
    pub query_years: Option<String>,
}

#[derive(Debug, Args)]
pub struct FrameArgs {
    #[arg(long, value_enum, default_value = "three-year")]
    pub window: WindowArg,
    /// Field-year groups smaller than this get no hit flag.
    #[arg(long, default_value_t = 20)]
    pub min_group: usize,
    /// Citation quantile defining a hit.
    #[arg(long, default_value_t = 0.95)]
    pub hit_quantile: f64,
    /// Count citations dated up to this day (default: latest date in the corpus).
    #[arg(long, value_name = "YYYY-MM-DD")]
    pub horizon: Option<String>,
    /// Years averaged for journal placement, FROM:TO.
    #[arg(long, default_value = "2000:2019", value_name = "FROM:TO")]
    pub placement_years: String,
    /// Minimum papers with a hit flag for a venue-year to count.
    #[arg(long, default_value_t = 10)]
    pub placement_min_papers: usize,
    /// Pool placement papers across years instead of averaging yearly shares.
    #[arg(long)]
    pub placement_pooled: bool,
}

#[derive(Debug, Args)]
pub struct CorpusCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TagCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// File holding a keyword query (default: the COVID-19 query).
    #[arg(long, conflicts_with = "query_string")]
    pub query: Option<PathBuf>,
    #[arg(long)]
    pub query_string: Option<String>,
    /// Restrict matches to FROM or FROM:TO publication years.
    #[arg(long, value_name = "FROM[:TO]")]
    pub years: Option<String>,
}

#[derive(Debug, Args)]
pub struct RelfreqCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub topic: TopicArgs,
    /// Publication year whose titles are compared.
    #[arg(long, default_value_t = 2020)]
    pub year: i32,
    /// Words to drop, one per line.
    #[arg(long)]
    pub exclusions: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub min_topic_papers: usize,
    #[arg(long, default_value_t = 500)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct PivotCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum, default_value = "three-year")]
    pub window: WindowArg,
    /// Only focal papers in FROM or FROM:TO.
    #[arg(long, value_name = "FROM[:TO]")]
    pub years: Option<String>,
    /// Only these authors, one ID per line.
    #[arg(long)]
    pub authors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImpactCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub frame: FrameArgs,
}

#[derive(Debug, Args)]
pub struct EstablishedArgs {
    /// Publications needed to count as established.
    #[arg(long, default_value_t = 5)]
    pub min_pubs: usize,
    /// Last year counted toward establishment.
    #[arg(long, default_value_t = 2019)]
    pub established_by: i32,
}

#[derive(Debug, Args)]
pub struct ProximityCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub topic: TopicArgs,
    #[command(flatten)]
    pub established: EstablishedArgs,
    /// Only papers before this year count.
    #[arg(long, default_value_t = 2020)]
    pub cutoff: i32,
    /// Authors to score, one per line (default: established authors).
    #[arg(long)]
    pub authors: Option<PathBuf>,
    /// Word score table for title proximity.
    #[arg(long)]
    pub relfreq: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CareersCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub established: EstablishedArgs,
    /// Years counted in the windowed publication count, FROM:TO.
    #[arg(long, default_value = "2015:2019", value_name = "FROM:TO")]
    pub career_window: String,
}

#[derive(Debug, Args)]
pub struct MatchCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub established: EstablishedArgs,
    #[arg(long, default_value = "2015:2019", value_name = "FROM:TO")]
    pub career_window: String,
    /// Treated authors, one per line. Without it, established authors of
    /// topic papers are treated.
    #[arg(long, conflicts_with_all = ["topic", "query", "query_string"])]
    pub treated: Option<PathBuf>,
    #[command(flatten)]
    pub topic: TopicArgs,
}

#[derive(Debug, Args)]
pub struct CollabCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub established: EstablishedArgs,
    /// Authors to track (default: every established author).
    #[arg(long)]
    pub authors: Option<PathBuf>,
}

/// A frame file written by `report`, or a corpus to build one from.
#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct SourceArgs {
    /// Corpus in JSON-lines format.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Paper frame table (frame.tsv).
    #[arg(long)]
    pub frame: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BinscatterCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub frame_opts: FrameArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value = "pivot")]
    pub x: String,
    #[arg(long, default_value = "hit")]
    pub y: String,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Fixed-effect columns to absorb, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub fe: Vec<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub fe_tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    pub fe_max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RegressCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    pub frame_opts: FrameArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value = "pivot")]
    pub x: String,
    #[arg(long, default_value = "hit")]
    pub y: String,
    #[arg(long, value_delimiter = ',')]
    pub fe: Vec<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub fe_tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    pub fe_max_iter: usize,
    /// Also fit a separate slope per value of this column.
    #[arg(long)]
    pub by: Option<String>,
    /// Groups with fewer complete rows are listed but not counted.
    #[arg(long, default_value_t = 100)]
    pub min_papers: usize,
    /// Also fit the slope-by-year interaction.
    #[arg(long)]
    pub trend: bool,
    #[arg(long, default_value = "year")]
    pub year: String,
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub seed: u64,
    /// JSON config; fields not given take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_authors: Option<usize>,
    #[arg(long)]
    pub n_venues: Option<usize>,
    #[arg(long)]
    pub n_fields: Option<usize>,
    /// Planted slope of impact on pivot size.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub frame: FrameArgs,
    #[command(flatten)]
    pub topic: TopicArgs,
    /// Impact column regressed on pivot size.
    #[arg(long, default_value = "hit")]
    pub impact: String,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, value_delimiter = ',', default_value = "field-year")]
    pub fe: Vec<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub fe_tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    pub fe_max_iter: usize,
}
