use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building instances, propagating risk or solving.
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

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// No zero-violation assignment was found (or none exists).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("search space of {needed} states exceeds the budget of {max_states}")]
    BudgetExceeded { needed: u128, max_states: u64 },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
