use thiserror::Error;

use crate::qla::QlaError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a physical state: {0}")]
    NotPhysical(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("coefficient has imaginary part {0:e}; basis or state is not hermitian")]
    ImaginaryPart(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Numeric(#[from] QlaError),
}

impl Error {
    /// Numeric failures (non-convergence) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(QlaError::NoConvergence { .. }))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
