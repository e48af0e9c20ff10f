//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Morphology and blur kernels must have a well-defined center pixel.
    #[error("kernel size must be odd and >= 1, got {0}")]
    BadKernelSize(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A mask with no foreground pixels where a region was required.
    #[error("region is empty: {0}")]
    EmptyRegion(String),

    #[error("box ({x1},{y1})-({x2},{y2}) does not fit the {w}x{h} canvas")]
    OutOfCanvas {
        x1: usize,
        y1: usize,
        x2: usize,
        y2: usize,
        h: usize,
        w: usize,
    },

    #[error("no samples found under {0}")]
    NoSamples(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("png encode: {0}")]
    Encode(#[source] image::ImageError),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Failures of the external refiner service, kept distinct so callers can
/// tell transport problems from protocol problems.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),

    #[error("request timed out after {0} ms")]
    Timeout(u64),

    #[error("refine service returned HTTP status {0}")]
    Status(u16),

    #[error("malformed payload from refine service: {0}")]
    MalformedPayload(String),

    #[error("refined image is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimMismatch {
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn decode(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Decode {
            path: path.into(),
            source,
        }
    }
}
