use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine reports.
///
/// Variants split into two families: bad arguments from the caller
/// (`Argument`, `Shape`) and violations of a data contract (everything
/// else). The CLI maps the first family to a usage exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("sample {id:?} has no entry in {what}")]
    Coverage { id: String, what: String },

    #[error("non-finite value in row {row:?}, column {column:?}")]
    NonFinite { row: String, column: String },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from how an operation was called rather
    /// than from the data it was given.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Shape(_))
    }
}
