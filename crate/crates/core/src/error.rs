use alloc::string::String;
use alloc::vec::Vec;

use crate::{CMatrix, Complex64};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("spectral density of kind `{0}` cannot be evaluated pointwise")]
    UnsupportedEvaluation(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge within {subdivisions} subdivisions (estimate {estimate}, error {error:e})")]
    Accuracy {
        estimate: Complex64,
        error: f64,
        subdivisions: usize,
    },

    #[error("Matsubara frequency {frequency} coincides with the Drude pole")]
    DegeneratePole { frequency: f64 },

    #[error("exponential fit failed: {reason} (residual {residual:e})")]
    FitFailure { reason: String, residual: f64 },

    #[error("spectrum validation failed [{check}]: {detail}")]
    Validation { check: &'static str, detail: String },

    #[error("configuration mismatch: {0}")]
    Configuration(String),

    #[error("propagation diverged at t = {time} in hierarchy row {row}; reduce dt or raise the truncation level")]
    Divergence { time: f64, row: usize },

    #[error("steady state not reached by t = {time} (residual {residual:e})")]
    NotConverged {
        time: f64,
        residual: f64,
        last: CMatrix,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("density matrix is rank deficient; eigenvalues {0:?}")]
    RankDeficient(Vec<f64>),

    #[error("product space dimension {0} exceeds the limit of 100000")]
    DimensionOverflow(usize),

    #[error("Fock truncation inadequate: thermal weight above n_max is {tail:e} (tolerance {tolerance:e})")]
    Truncation { tail: f64, tolerance: f64 },

    #[error("linear solve failed: {0}")]
    Singular(&'static str),
}
