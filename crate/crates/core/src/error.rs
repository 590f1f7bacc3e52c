use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("UE position coincides with cell {0}; bearing is undefined")]
    CoincidentUe(usize),

    #[error("cluster needs at least {needed} cells, got {got}")]
    TooFewCells { needed: usize, got: usize },

    #[error("angles unresolvable at this codebook resolution (cells {0} and {1} share Tx beam {2})")]
    AnglesUnresolvable(usize, usize, usize),

    #[error("triangulation failed: {0}")]
    TriangulationFailed(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
