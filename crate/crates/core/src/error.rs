//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { got: usize, min: usize },

    #[error("non-finite coordinate encountered")]
    NonFinite,

    #[error("point must lie in the open unit ball, |x| = {0}")]
    OutsideBall(f64),

    #[error("point must lie on the unit sphere, |x| = {0}")]
    NotOnSphere(f64),

    #[error("evaluation at the kernel pole x = y")]
    KernelPole,

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("orientation failure: Jacobian determinant {0} is not positive")]
    OrientationFailure(f64),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("pole argument for gamma: {0}")]
    GammaPole(f64),

    #[error("series did not converge to {tol:e} within {max_terms} terms")]
    SeriesDivergence { tol: f64, max_terms: usize },

    #[error("quadrature error estimate {estimate:e} exceeds requested tolerance {tol:e}")]
    BudgetExceeded { estimate: f64, tol: f64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("NaN produced by integrand or data")]
    NanProduced,

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("angle out of range: {0}")]
    AngleOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
