use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite loss contribution at row {row}")]
    NonFinite { row: usize },

    #[error("objective became non-finite at iteration {iteration}, coordinate {coordinate}")]
    Diverged { iteration: usize, coordinate: usize },

    #[error("fit failed at lambda index {index} (lambda = {lambda}): {source}")]
    Path {
        index: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("cross-validation fold {fold} failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {requested} bootstrap replicates failed (limit is 5%)")]
    TooManyReplicateFailures { failed: usize, requested: usize },

    #[error("record {id}: no follower observation at or before {timestamp}")]
    MissingFollowers { id: String, timestamp: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus mixes authors {first:?} and {other:?}")]
    MixedAuthors { first: String, other: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
