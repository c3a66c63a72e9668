use std::path::PathBuf;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("joint {joint} angle {value} outside limits [{low}, {high}]")]
    JointLimit {
        joint: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("lidar unit index {0} out of range 1..=16")]
    UnitIndex(usize),

    #[error("range {0} m is not in (0, max range]")]
    InvalidRange(f64),

    #[error("ray direction is not unit length (|d| = {0})")]
    InvalidDirection(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("shape mismatch at layer {layer}: {message}")]
    Shape { layer: usize, message: String },

    #[error("empty batch")]
    EmptyBatch,

    #[error("batch length mismatch: {pred} predictions vs {truth} targets")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: train rmse {rmse} exceeds 10x initial {initial}")]
    Divergence { epoch: usize, rmse: f64, initial: f64 },

    #[error("measurement noise sigma must be positive, got {0}")]
    DegenerateLikelihood(f64),

    #[error("particle filter stepped before initialization")]
    NotInitialized,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
