use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has non-finite entries")]
    NonFinite,

    #[error("value array has length {got}, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("exponent p = {0} outside the admissible range")]
    InvalidExponent(f64),

    #[error("field is identically zero")]
    ZeroField,

    #[error("oscillator mode {mode} not resolved on this grid (quadrature norm off by {deviation:.3e})")]
    UnresolvedMode { mode: usize, deviation: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NlsError> = std::result::Result<T, E>;
