use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: predicted size {predicted} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        predicted: u128,
        cap: u128,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// A parameter condition failed; the message names the violated inequality.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small on axis {axis}: {size} points, need at least {required}")]
    GridTooSmall {
        axis: usize,
        size: usize,
        required: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("ill-conditioned least-squares refit (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable variant name for machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::Overflow(_) => "overflow",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::Unsupported(_) => "unsupported",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
