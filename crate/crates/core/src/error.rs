use thiserror::Error;

/// Errors raised by the field, kernel, operator and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("non-finite sample {value} at node ({i}, {j}, {k}), component {component}")]
    NonFiniteSample {
        i: usize,
        j: usize,
        k: usize,
        component: usize,
        value: f64,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("rank mismatch: expected {expected} components, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("time grid mismatch: {0}")]
    TimeGridMismatch(String),
    #[error("ball out of range: {0}")]
    BallOutOfRange(String),
    #[error("empty mask")]
    EmptyMask,
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("time must be positive, got t = {0}")]
    NonPositiveTime(f64),
    #[error("source is not mean-zero: mean {mean:e} exceeds tolerance {tolerance:e}")]
    NonZeroMean { mean: f64, tolerance: f64 },
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("time grid too coarse: {0}")]
    TimeGridTooCoarse(String),
    #[error("workspace too large: {0}")]
    WorkspaceTooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
