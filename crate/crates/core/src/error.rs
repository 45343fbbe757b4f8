use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty integration domain [{lo}, {hi}]")]
    EmptyDomain { lo: f64, hi: f64 },

    #[error("polynomial degree {0} exceeds the supported maximum of 30")]
    UnsupportedDegree(usize),

    #[error("invalid piecewise polynomial: {0}")]
    InvalidPolynomial(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("a neighborhood needs 2 or 4 neighbors, got {0}")]
    NeighborCount(usize),

    #[error("estimator requires histogram distributions")]
    NotHistogram,

    #[error(
        "combinatorial histogram evaluation visits bins^5 = {combinations} kernel combinations; \
         refusing {bins} bins (limit {limit})"
    )]
    TooManyBins { bins: usize, limit: usize, combinations: u64 },

    #[error("field of {width}x{height} pixels has no interior (need at least 3x3)")]
    FieldTooSmall { width: usize, height: usize },

    #[error("dimensions must be nonzero")]
    ZeroDimensions,

    #[error("field shapes or masks differ")]
    ShapeMismatch,

    #[error("peak ({x}, {y}) lies on or next to the field boundary")]
    PeakOnBoundary { x: usize, y: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("payload length mismatch: header implies {expected} bytes, found {actual}")]
    PayloadLength { expected: usize, actual: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
