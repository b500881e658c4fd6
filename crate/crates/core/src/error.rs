use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {what} `{token}`")]
    UnknownToken { what: &'static str, token: String },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),

    #[error("rejection budget of {budget} exhausted for sample {index} of split `{split}`")]
    RejectionBudgetExhausted { split: String, index: usize, budget: usize },

    #[error("ground truth has no shapes")]
    EmptyGroundTruth,

    #[error("length mismatch: {left} ground-truth values vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png encoding failed: {0}")]
    Png(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
