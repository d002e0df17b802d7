use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("numerical consistency check failed: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing reference: {0}")]
    MissingReference(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
