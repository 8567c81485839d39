use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant failed. `field` names the offending field.
    #[error("{message}")]
    Config { field: &'static str, message: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation not supported by this potential: {0}")]
    Unsupported(&'static str),

    #[error("dimensions {rows}x{cols} must be powers of two")]
    NotPowerOfTwo { rows: usize, cols: usize },

    #[error("shape {rows}x{cols} is not divisible by 2^{levels}")]
    IncompatibleWaveletShape { rows: usize, cols: usize, levels: usize },

    #[error("dictionary is not orthogonal (round-trip error {0:e})")]
    NonOrthogonal(f64),

    #[error("denoiser timed out after {0:?}")]
    DenoiserTimeout(std::time::Duration),

    #[error("denoiser returned {found} values, expected {expected}")]
    DenoiserShapeMismatch { expected: usize, found: usize },

    #[error("denoiser returned a non-finite value at index {index}")]
    DenoiserNonFinite { index: usize },

    #[error("denoiser protocol error: {0}")]
    Protocol(String),

    #[error("non-finite log-likelihood at nested iteration {iteration}")]
    NonFiniteLogLikelihood { iteration: usize },

    #[error("replacement at nested iteration {iteration} violates its likelihood threshold")]
    ConstraintViolation { iteration: usize },

    #[error("dead-point log-likelihood decreased at nested iteration {iteration}")]
    NonMonotoneThreshold { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
