use thiserror::Error;

/// Errors produced by model construction, problem evaluation and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("negative argument {0} where a nonnegative value is required")]
    NegativeArgument(f64),

    #[error("argument {value} outside of {domain}")]
    OutOfRange { value: f64, domain: &'static str },

    #[error("parse error at byte {offset}: expected one of {}", expected.join(", "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Slater condition violated: g(x, 0) = {value} is not negative")]
    SlaterViolation { value: f64 },

    #[error("non-convexity detected along direction: {0}")]
    NonConvexityDetected(String),

    #[error("degenerate denominator <grad_z g_{component}, Lv> = {value:e}")]
    DegenerateDenominator { component: usize, value: f64 },

    #[error("component {0} is not smooth in x; the gradient formula needs C1 data")]
    NonSmoothComponent(usize),

    #[error("root solver did not converge: {0}")]
    RootNotConverged(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
