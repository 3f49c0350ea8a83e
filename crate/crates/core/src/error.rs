use thiserror::Error;

use crate::multiplier::AdmissibilityReport;

#[derive(Debug, Error)]
pub enum PaxError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{0} has zero norm")]
    ZeroNorm(&'static str),

    #[error("evaluation point {point:?} outside the sampled range")]
    OutOfRange { point: Vec<f64> },

    #[error("multiplier is not admissible (max deviation {:.3e})", .0.max_deviation)]
    NotAdmissible(Box<AdmissibilityReport>),

    #[error("invalid field file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PaxError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        PaxError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, PaxError>;
