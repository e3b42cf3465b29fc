use std::path::PathBuf;

use thiserror::Error;

use crate::ppdna::SolveTrace;

pub type Result<T, E = GglError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GglError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("non-finite values encountered in {0}")]
    NonFinite(String),

    #[error(
        "line search failed after {steps} backtracking steps (slope {slope:.3e}, gradient norm {grad_norm:.3e})"
    )]
    LineSearch {
        steps: usize,
        slope: f64,
        grad_norm: f64,
    },

    #[error("semismooth Newton stopped after {iterations} iterations with gradient norm {grad_norm:.3e}")]
    NewtonCap { iterations: usize, grad_norm: f64 },

    #[error("subproblem {outer} failed: {reason}")]
    Subproblem {
        outer: usize,
        reason: String,
        trace: Box<SolveTrace>,
    },

    #[error("no convergence after {iterations} outer iterations (eta_p = {eta:.3e})")]
    OuterCap {
        iterations: usize,
        eta: f64,
        trace: Box<SolveTrace>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl GglError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GglError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        GglError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// The solve trace attached to solver failures, if any.
    pub fn trace(&self) -> Option<&SolveTrace> {
        match self {
            GglError::Subproblem { trace, .. } | GglError::OuterCap { trace, .. } => Some(trace),
            _ => None,
        }
    }
}
