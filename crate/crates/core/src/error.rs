use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// PGM decoding failed at the given byte offset.
    #[error("PGM decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("invalid render options: {0}")]
    InvalidRender(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
