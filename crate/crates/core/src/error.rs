use thiserror::Error;

/// Errors raised by the numerical and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A structural invariant failed; `magnitude` is the size of the violation.
    #[error("invariant violated: {invariant} (magnitude {magnitude:e})")]
    Invariant {
        invariant: &'static str,
        magnitude: f64,
    },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    /// The protocol's branch family is not trace preserving or a receiver op is not unitary.
    #[error("protocol is not deterministic (residual {residual:e})")]
    NonDeterministic { residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, magnitude: f64) -> Self {
        Error::Invariant {
            invariant,
            magnitude,
        }
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
