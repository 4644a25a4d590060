use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs that do not describe a valid instance (dimension mismatch,
    /// out-of-range index, nonbinary matrix where a binary one is needed).
    #[error("invalid instance: {0}")]
    Instance(String),

    /// Parameters outside a construction's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Exhaustive work would exceed the configured budget. Kept distinct from
    /// a negative verdict so callers never confuse "refused" with "false".
    #[error("work budget exceeded: {required} units needed, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    /// The decoded candidate list is too long for the test design to be
    /// trusted (weak expander or violated hypothesis).
    #[error("scheme failure: candidate list has {list_size} subjects, limit is {limit}")]
    ListOverflow { list_size: usize, limit: usize },

    /// Readings that cannot have come from the declared design.
    #[error("inconsistent readings: {0}")]
    Inconsistent(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn instance(msg: impl Into<String>) -> Self {
        Error::Instance(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
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
}
