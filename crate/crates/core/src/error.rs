use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("duplicate resource id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },

    #[error("unknown resource id {0:?}")]
    UnknownId(String),

    #[error("invalid property type {0:?}: must be non-empty, without whitespace or commas")]
    InvalidProperty(String),

    #[error("corrupt file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },

    #[error("unknown relation label {label:?}; valid labels: {valid}")]
    UnknownRelation { label: String, valid: String },

    #[error("relation {0:?} needs a property whose values are resource ids")]
    NotAReferenceProperty(String),

    #[error("network is already normalized")]
    AlreadyNormalized,

    #[error("network is not normalized")]
    NotNormalized,

    #[error("node {0:?} has no outgoing edges")]
    NoOutgoingEdges(String),

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
