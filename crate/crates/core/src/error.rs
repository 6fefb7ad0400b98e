use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A request would exceed a configured memory or work cap.
    #[error("{param} = {value} exceeds the configured cap of {cap}")]
    ResourceBound {
        param: &'static str,
        value: u64,
        cap: u64,
    },

    /// A query point lies outside what a table or census covers.
    #[error("{param} = {value} is out of range (limit {limit})")]
    OutOfRange {
        param: &'static str,
        value: u64,
        limit: u64,
    },

    /// `log log x` is undefined or non-positive for the given argument.
    #[error("{param} = {value} is outside the domain: {reason}")]
    Domain {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid argument {param}: {reason}")]
    InvalidArgument { param: &'static str, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn invalid(param: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            param,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceBound { .. } => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
