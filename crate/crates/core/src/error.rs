use thiserror::Error;

/// Errors produced by the toroidal distribution routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("unsupported family for this operation: {0}")]
    UnsupportedFamily(String),

    #[error("series did not converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("integration error: integrand is not finite at {0:?}")]
    Integration(Vec<f64>),

    #[error("sampler exceeded {0} proposals for a single draw")]
    RejectionCap(usize),

    #[error("variance {0:e} too small: skewness and kurtosis are undefined")]
    DegenerateVariance(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate mixture component: {0}")]
    DegenerateComponent(String),

    #[error("optimizer inconsistency: {0}")]
    OptimizerInconsistency(String),

    #[error("closed-form marginal rejected: differs from quadrature by {0:e}")]
    ClosedFormRejected(f64),

    #[error("empty input")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, Error>;
