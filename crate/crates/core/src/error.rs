use thiserror::Error;

use crate::walecki::Edge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments outside an operation's domain of definition.
    #[error("input error: {0}")]
    Input(String),

    /// Arguments are well-formed but the mathematical precondition fails
    /// (zero matrix, indefinite covariance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method stopped at its cap; `estimate` is the best value seen.
    #[error("numeric error: {message} (best estimate {estimate})")]
    Numeric { message: String, estimate: f64 },

    /// The data itself violates an assumption, e.g. duplicate points.
    #[error("data error: {message} ({} offending edges)", edges.len())]
    Data { message: String, edges: Vec<Edge> },

    /// A theorem precondition cannot be met by any parameter repair.
    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Format(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Data { .. } | Error::Domain(_) => 2,
            Error::Constraint(_) => 3,
            Error::Numeric { .. } => 4,
        }
    }
}

/// Dataset decoding failures. Each variant has its own stable code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic bytes {0:?}, expected \"BJLD\"")]
    BadMagic([u8; 4]),
    #[error("unsupported BJLD version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl FormatError {
    pub fn code(&self) -> u32 {
        match self {
            FormatError::BadMagic(_) => 10,
            FormatError::UnsupportedVersion(_) => 11,
            FormatError::Truncated { .. } => 12,
            FormatError::NonFinite { .. } => 13,
            FormatError::Malformed(_) => 14,
        }
    }
}
