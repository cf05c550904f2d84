use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error: missing column `{column}`")]
    Schema { column: String },

    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },

    #[error("numeric error: non-finite values in `{tensor}`")]
    Numeric { tensor: String },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("too few samples: {n} non-zero differences, need at least {min}")]
    TooFewSamples { n: usize, min: usize },

    #[error("degenerate data: all paired differences are zero")]
    Degenerate,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("weight file: {0}")]
    WeightFormat(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
