use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two vectors or matrices are not mutually comparable (some directed
    /// Funk distance between them is infinite).
    #[error("arguments belong to different parts of the cone: {0}")]
    DifferentParts(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The common support pattern has no strictly positive power within
    /// Wielandt's bound.
    #[error("support pattern is not primitive (no positive power up to {cap})")]
    NotPrimitive { cap: usize },

    #[error("game failed validation: {0}")]
    Validation(String),

    #[error("cone construction needs {needed} generators, cap is {cap}")]
    DepthOverflow { needed: u128, cap: usize },

    #[error("supplied cone is not invariant: {0}")]
    ConeNotInvariant(String),

    #[error("grid resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("image x·M vanished")]
    DegenerateImage,

    #[error("no grid point at finite Funk distance")]
    NoFiniteDistance,

    #[error("value function is not 1-Lipschitz on the grid: v[{i}] - v[{j}] = {gap} > Funk = {bound}")]
    NotLipschitz {
        i: usize,
        j: usize,
        gap: f64,
        bound: f64,
    },

    #[error("iteration cap {cap} exceeded without meeting the stopping rule")]
    IterationCap { cap: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

impl Error {
    /// Process exit status: 2 for rejected input, 3 for failures inside the
    /// solver pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DifferentParts(_)
            | Error::InvalidParam(_)
            | Error::DimensionMismatch { .. }
            | Error::NotPrimitive { .. }
            | Error::Validation(_)
            | Error::ConeNotInvariant(_)
            | Error::Io(_)
            | Error::Parse(_) => 2,
            Error::DepthOverflow { .. }
            | Error::ResolutionTooCoarse(_)
            | Error::DegenerateImage
            | Error::NoFiniteDistance
            | Error::NotLipschitz { .. }
            | Error::IterationCap { .. }
            | Error::Lp(_) => 3,
        }
    }
}
