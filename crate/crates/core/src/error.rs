use std::path::PathBuf;

use thiserror::Error;

use crate::model::ClassId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("cannot normalize a zero vector")]
    ZeroNorm,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no candidate classes: the prototype set and the user store are both empty")]
    NoCandidates,

    #[error("class {0:?} has no records")]
    EmptyClass(String),

    #[error("mean of class {0:?} has zero norm")]
    ZeroMean(String),

    #[error("unknown class id {0}")]
    UnknownClass(ClassId),

    #[error("user {user:?}: expected t = {expected}, found t = {found}")]
    NonContiguous {
        user: String,
        expected: u32,
        found: u32,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
