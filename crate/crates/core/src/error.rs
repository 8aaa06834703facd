use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Input data is malformed or violates an invariant.
    Data,
    /// A file could not be read or written.
    Io,
    /// A configuration value is out of range.
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing channel file {0}")]
    MissingChannel(PathBuf),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad encoding in {path}: {reason}")]
    BadEncoding { path: PathBuf, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("channel has no valid pixels")]
    EmptyChannel,
    #[error("point lies outside the vertical field of view")]
    OutOfFov,
    #[error("pixel ({row}, {col}) is outside the {height}x{width} grid")]
    InvalidPixel {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("range must be positive")]
    ZeroRange,
    #[error("polygon has {0} vertices, need at least 3")]
    DegeneratePolygon(usize),
    #[error("split ratios must sum to 100, got {0}")]
    BadRatios(u32),
    #[error("frame id {0:?} has no annotation list")]
    UnknownId(String),
    #[error("line {line}: score {score} outside [0, 1]")]
    ScoreRange { line: usize, score: f64 },
    #[error("bad box: {0}")]
    BadBox(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),
    #[error("need at least {needed} frames, got {available}")]
    InsufficientFrames { needed: usize, available: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MissingChannel(_) | Error::Io { .. } => ErrorCategory::Io,
            Error::Config(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}
