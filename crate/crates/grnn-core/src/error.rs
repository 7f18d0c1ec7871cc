use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum GrnnError {
    /// Input data failed a semantic check (bad graph reference, gap too
    /// long, node ordering mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller-supplied scalar is out of its allowed range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Shape or length mismatch between arguments.
    #[error("contract error: {0}")]
    Contract(String),

    /// Non-finite values or training divergence.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed input text.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GrnnError>;
