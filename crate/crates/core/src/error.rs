use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("unknown paper: {0}")]
    UnknownPaper(String),

    #[error("unknown author: {0}")]
    UnknownAuthor(String),

    #[error("unknown venue: {0}")]
    UnknownVenue(String),

    #[error("author {author} is not listed on paper {paper}")]
    AuthorNotOnPaper { author: String, paper: String },

    #[error("author {0} is not in the established set")]
    NotEstablished(String),

    #[error("query parse error at byte {position}: {message}")]
    QueryParse { position: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("column {column} has {found} values, frame has {expected} rows")]
    ColumnLength {
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("not enough rows: need at least {needed}, have {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("design matrix is rank deficient: column `{0}` is collinear with earlier columns")]
    RankDeficient(String),

    #[error("fixed-effect demeaning did not converge after {iterations} sweeps (max update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid synthetic config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("malformed table at line {line}: {message}")]
    Table { line: usize, message: String },
}
