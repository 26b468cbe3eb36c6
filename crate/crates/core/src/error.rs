use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtnError {
    /// Invalid grid or parameter setup.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    /// A point or parameter lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at (or too close to) a kernel singularity.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// A ratio whose denominator vanished.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Products would exceed the dealiasing headroom of the grid.
    #[error("dealiasing error: {0}")]
    Dealiasing(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, DtnError>;

impl From<std::io::Error> for DtnError {
    fn from(e: std::io::Error) -> Self {
        DtnError::Io(e.to_string())
    }
}
