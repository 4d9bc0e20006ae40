use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the optimizer, the planning model, and the bench harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called with arguments outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The objective returned a non-finite value during a run.
    #[error("objective evaluation failed at iteration {iteration}: non-finite cost for habitat {habitat:?}")]
    ObjectiveEvaluation { iteration: usize, habitat: Vec<f64> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data or config file failed to parse; the message carries the
    /// file path and, where the format supports it, line/column context.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A file parsed but its contents violate the schema invariants.
    #[error("{path}: validation failed:\n{}", defects.join("\n"))]
    Validation { path: PathBuf, defects: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
