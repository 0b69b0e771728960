use alloc::string::String;

use crate::volume::Dims;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate ({x}, {y}, {z}) out of bounds for {dims}")]
    OutOfBounds { x: i64, y: i64, z: i64, dims: Dims },

    #[error("slab [{start}, {start}+{count}) exceeds {n_z} slices")]
    SlabOutOfRange { start: usize, count: usize, n_z: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: Dims, actual: Dims },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in iterate at outer iteration {outer}, inner iteration {inner}")]
    NonFinite { outer: usize, inner: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
