use thiserror::Error;

use super::ParseError;

/// Errors raised by the expression kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("exact division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("unbound name `{0}` during evaluation")]
    UnboundName(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("pole on the integration path of a formal antiderivative")]
    PoleOnPath,
    #[error("quadrature did not converge (estimated error {0:e})")]
    QuadratureNonConvergent(f64),
    #[error("all {0} sample points were rejected as singular")]
    AllSamplesRejected(usize),
}
