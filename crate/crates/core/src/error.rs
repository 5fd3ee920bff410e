use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel evaluated on the diagonal x = y")]
    Diagonal,

    #[error("degenerate fit: all predicted values vanish")]
    DegenerateFit,

    #[error("gauge violation: |div a| / |a| = {ratio:.3e}")]
    GaugeViolation { ratio: f64 },

    #[error("solver did not converge in {iterations} iterations (last relative residual {last:.3e})")]
    NotConverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("non-finite value in Krylov iterate at iteration {iteration}")]
    NanInIterate { iteration: usize },
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FracError {
    FracError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
