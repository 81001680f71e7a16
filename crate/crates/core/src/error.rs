use std::path::PathBuf;

use thiserror::Error;

use crate::model::HierarchicalState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Input shape is unusable (too short, overlapping segments, ...).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("{0} did not converge")]
    Convergence(&'static str),

    #[error("invariant violated at iteration {iteration}: {reason}")]
    Invariant {
        iteration: usize,
        reason: String,
        state: Box<HierarchicalState>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
