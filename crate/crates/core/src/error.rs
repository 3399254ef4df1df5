use thiserror::Error;

/// Errors produced by the inference library.
///
/// The variants split along the exit-code classes the CLI maps onto:
/// bad inputs ([`Error::Domain`], [`Error::Usage`]) versus failures of the
/// numerics themselves ([`Error::Numeric`] and friends).
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation was called in a way that can never be valid
    /// (empty input, missing axis, unnormalized grid where one is required).
    #[error("usage error: {0}")]
    Usage(String),

    /// A computation produced or encountered a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Every grid node carries zero mass; no evidence can be defined.
    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    /// A conditional-MLE slice is everywhere impossible.
    #[error("path gap at s-node {index} (s = {s}): {message}")]
    PathGap { index: usize, s: f64, message: String },

    /// A likelihood slice has non-negative curvature at its maximizer,
    /// so no Laplace width exists.
    #[error("curvature error at s-node {index} (s = {s}): second difference {second_diff} >= 0")]
    Curvature {
        index: usize,
        s: f64,
        second_diff: f64,
    },

    /// Model parameters violate a structural constraint of a demo model.
    #[error("parameter error: {0}")]
    Parameter(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Process exit code class: 2 for bad input, 3 for numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Usage(_) | Error::Parameter(_) => 2,
            Error::Numeric(_)
            | Error::DegenerateEvidence(_)
            | Error::PathGap { .. }
            | Error::Curvature { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
