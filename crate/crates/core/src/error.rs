use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the model pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters or run configuration are invalid or incomplete.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to converge.
    #[error("numeric error in {context}: {message}")]
    Numeric { context: String, message: String },

    /// A cached artifact was produced from different parameters.
    #[error("stale data: expected fingerprint {expected}, found {found}")]
    Stale { expected: String, found: String },

    /// A named state, line or key could not be found.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// An operation was called with arguments violating its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numeric(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Numeric { .. } => "numeric",
            Error::Stale { .. } => "stale",
            Error::Lookup(_) => "lookup",
            Error::Precondition(_) => "precondition",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
