use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("layout violation: {0}")]
    LayoutViolation(&'static str),

    #[error("even length required, got {0}")]
    EvenLengthRequired(usize),

    #[error("even dims required, got {height}x{width} (minimum {min})")]
    EvenDimsRequired {
        height: usize,
        width: usize,
        min: usize,
    },

    #[error("dimensions {height}x{width} are not even at step {step} of {steps}")]
    IndivisibleDims {
        step: usize,
        steps: usize,
        height: usize,
        width: usize,
    },

    #[error("non-finite input")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported magic {0:?}")]
    UnsupportedMagic(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated data: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by image geometry (odd or indivisible sizes).
    pub fn is_dimension_error(&self) -> bool {
        matches!(
            self,
            Error::EvenDimsRequired { .. } | Error::IndivisibleDims { .. } | Error::EvenLengthRequired(_)
        )
    }

    /// True for errors raised while reading or writing files.
    pub fn is_io_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::UnsupportedMagic(_) | Error::MalformedHeader(_) | Error::Truncated { .. }
        )
    }
}
