//! Crate-wide error type.

use std::path::PathBuf;

use crate::kgstore::ConceptId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown class label {0:?}")]
    UnknownLabel(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("concept not found in snapshot: {0}")]
    ConceptNotFound(ConceptId),

    #[error("fetch failed for key {key:?} at {endpoint}: {message}")]
    Fetch {
        endpoint: String,
        key: String,
        message: String,
    },

    #[error("cache entry unusable at {path} (delete it to force a re-fetch): {message}")]
    Cache { path: PathBuf, message: String },

    #[error("training failed at epoch {epoch}, batch {batch}: {message}")]
    Training {
        epoch: usize,
        batch: usize,
        message: String,
    },

    #[error("cosine similarity is undefined for a zero-norm vector")]
    ZeroNormVector,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
