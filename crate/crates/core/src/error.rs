//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by solvers and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector arguments whose dimensions must agree did not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input lay outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative scheme exhausted its budget without meeting tolerance.
    #[error("failed to converge after {iterations} iterations (residual {residual:.3e}){context}")]
    Convergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    /// The saddle solution touched an artificial box bound; the box must grow.
    #[error("solution touched the {bound} box bound ({value:.6e} vs limit {limit:.6e})")]
    BoxTooSmall {
        bound: &'static str,
        value: f64,
        limit: f64,
    },

    /// An internal identity that should hold for valid inputs failed.
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    /// Training ran out of iterations; the partial report is attached.
    #[error(
        "training failed to converge after {} iterations (subgradient norm {:.3e})",
        report.iterations,
        report.grad_norm
    )]
    TrainingStalled {
        report: Box<crate::simulate::TrainReport>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
