use std::path::PathBuf;

use thiserror::Error;

use crate::training::TrainHistory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("line {line}: duplicate rating for user {user}, item {item}")]
    Duplicate { line: usize, user: String, item: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate mapping range: max {max} equals min {min}")]
    DegenerateRange { max: f64, min: f64 },

    #[error("training diverged at epoch {epoch}, sample {sample}")]
    Diverged {
        epoch: usize,
        sample: usize,
        /// Epochs that completed before the failure.
        history: Box<TrainHistory>,
    },

    #[error("malformed model or matrix file: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
