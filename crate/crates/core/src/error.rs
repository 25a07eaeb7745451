use thiserror::Error;

use crate::expr::{ExprError, ParseError};

/// Errors raised while building systems, transformations and certificates.
#[derive(Debug, Error)]
pub enum DkitError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0} is identically zero")]
    ZeroInput(&'static str),
    #[error("{what} must be a polynomial in {var}")]
    NotPolynomial { what: &'static str, var: String },
    #[error("{0} must not depend on zeta")]
    DependsOnZeta(&'static str),
    #[error("{what} is not an eigenfunction (residual {residual:.3e})")]
    NotEigenfunction { what: String, residual: f64 },
    #[error("{what} does not solve the Riccati equation (residual {residual:.3e})")]
    NotRiccatiSolution { what: String, residual: f64 },
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<DkitError> },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("construction check failed for {object}: residual {residual:.3e}")]
    CheckFailed { object: String, residual: f64 },
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("flow: {0}")]
    Flow(String),
}

pub type Result<T> = std::result::Result<T, DkitError>;
