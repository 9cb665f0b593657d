use thiserror::Error;

/// Errors raised by the core toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("degenerate output size {width}x{height}")]
    DegenerateSize { width: usize, height: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("patch size {patch} exceeds image {width}x{height}")]
    PatchTooLarge { patch: usize, width: usize, height: usize },

    #[error("pixel ({x}, {y}) not covered by any patch")]
    UncoveredPixel { x: usize, y: usize },

    #[error("requested {requested} neighbours but only {available} candidates")]
    NotEnoughCandidates { requested: usize, available: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("container format: {0}")]
    Format(String),

    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
