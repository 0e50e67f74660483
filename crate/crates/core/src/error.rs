use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library. Every public fallible operation returns
/// this type; the CLI maps variants onto exit codes and the FFI layer onto
/// status codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid orbit mode: {0}")]
    InvalidMode(String),

    #[error("index {index} out of range (partition has {len} branches)")]
    OutOfRange { index: usize, len: usize },

    #[error("target measure unreachable: {0}")]
    UnreachableTarget(String),

    #[error("precision budget exceeded: {0}")]
    PrecisionBudget(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
