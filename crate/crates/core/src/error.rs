use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed vectors or grids whose sizes do not fit together.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A precondition on an argument value was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid user-facing configuration (grid sizes, noise levels, sweep settings).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// NaN or infinity appeared while iterating.
    #[error("numerical failure at iteration {iteration}: {reason}")]
    Numerical { iteration: usize, reason: String },

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Every cell of a sweep failed, so there is nothing to select.
    #[error("no successful cells in sweep result")]
    EmptyResult,

    /// Malformed surface file.
    #[error("parse error in {path}: {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether this error came from floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. } | Error::NoConvergence { .. })
    }

    pub(crate) fn numerical(iteration: usize, reason: impl Into<String>) -> Self {
        Error::Numerical {
            iteration,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
