//! Measurement engine for scientific pivots over bibliographic corpora:
//! venue-distribution pivot size, keyword topic tagging, citation hit rates,
//! proximity to a topic, career matching, new collaborators, and
//! fixed-effect residualized regression.

pub mod careers;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod pivot;
pub mod stats;
pub mod synth;
pub mod table;
pub mod tagger;

pub use corpus::{
    ingest, Corpus, FieldYearKey, IngestConfig, PaperRecord, PubDate, ValidationReport,
};
pub use error::{Error, Result};
