use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("forward cache does not belong to this network (stale or mismatched)")]
    StaleCache,

    #[error("architecture mismatch: {0}")]
    Architecture(String),

    #[error("replay buffer holds {available} transitions, {requested} requested")]
    Undersized { available: usize, requested: usize },

    #[error("infeasible bounds: {0}")]
    Infeasible(String),

    #[error("joint action space of {size} exceeds the ceiling {ceiling}; shrink the instance")]
    ActionSpaceTooLarge { size: u128, ceiling: u128 },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("environment stepped before reset")]
    NotReset,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// aborted runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Json(_)
            | Error::Infeasible(_)
            | Error::ActionSpaceTooLarge { .. }
            | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

pub(crate) fn ensure_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual,
        })
    }
}
