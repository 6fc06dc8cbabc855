use thiserror::Error;

/// Errors produced by the numerical kernels and the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An eigenvalue sits on (or within the guard distance of) the negative
    /// real axis, so the principal logarithm is not well defined.
    #[error("eigenvalue phase {phase:.12} lies within {guard:e} rad of the branch cut")]
    BranchCut { phase: f64, guard: f64 },

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("iteration failed to converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
