use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pseudometric index {index} out of range (space has {count})")]
    InvalidPseudometric { index: usize, count: usize },

    #[error("point does not belong to the space: {0}")]
    PointMismatch(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("grid must contain at least one point")]
    EmptyGrid,

    #[error("grid is not strictly increasing at index {index}")]
    GridNotIncreasing { index: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("functions do not share grid and space")]
    DomainMismatch,

    #[error("restriction to [{lo}, {hi}] is empty")]
    EmptyRestriction { lo: f64, hi: f64 },

    #[error("{0} is not a grid point")]
    NotAGridPoint(f64),

    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),

    #[error("invalid eps ladder: {0}")]
    BadLadder(String),

    #[error("operation requires a scalar space")]
    NotScalar,

    #[error("factorial-step order {0} is out of range 1..=8")]
    OrderTooLarge(usize),

    #[error("no candidate lies within eps of the value at grid index {index}")]
    Infeasible { index: usize },

    #[error("sequence member {member} is not nondecreasing at position {position}")]
    NonMonotone { member: usize, position: usize },

    #[error("sequence member {member} is not bounded")]
    Unbounded { member: usize },

    #[error("window ({lo}, {hi}) contains no grid point")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
