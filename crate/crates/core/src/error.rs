use thiserror::Error;

use crate::coeff::CoeffKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("grading mismatch")]
    GradingMismatch,
    #[error("coefficient kind mismatch ({left} vs {right})")]
    CoeffKindMismatch { left: CoeffKind, right: CoeffKind },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {0} out of range")]
    InvalidVariable(usize),
    #[error("block index {0} out of range")]
    InvalidBlock(usize),
    #[error("invalid grading: {0}")]
    InvalidGrading(String),
    #[error("polynomial is not homogeneous per block")]
    NotHomogeneous,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("division is not exact")]
    NotDivisible,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-level error. [`Error::exit_code`] maps each variant to the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("calibration failure: {0}")]
    Calibration(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Calibration(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
