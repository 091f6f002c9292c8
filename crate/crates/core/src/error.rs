use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the pipeline.
///
/// Validation-style variants (bad input, bad configuration) are kept apart
/// from numeric failures so the CLI can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("no co-occurrence between `{0}` and `{1}`")]
    NoCooccurrence(String, String),

    #[error("zero vector")]
    ZeroVector,

    #[error("undefined DCW (orthogonal words): `{0}` / `{1}`")]
    UndefinedDcw(String, String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown feature: {0}")]
    UnknownFeature(String),

    #[error("column `{column}` has only {observed:.1}% observed cells (floor is {floor:.0}%)")]
    TooSparse {
        column: String,
        observed: f64,
        floor: f64,
    },

    #[error("zero variance input")]
    ZeroVariance,

    #[error("column mismatch: missing {missing:?}, extra {extra:?}")]
    ColumnMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("diverged; lower learning rate")]
    Diverged,

    #[error("MAPE undefined: true value is zero at index {0}")]
    MapeUndefined(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration, as opposed to a
    /// numerical or I/O failure at runtime.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Diverged | Error::Io { .. } | Error::Csv(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
