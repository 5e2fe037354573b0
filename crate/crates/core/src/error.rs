use thiserror::Error;

/// Errors raised by the simulation and analysis modules.
///
/// Scalar payloads are stored as `f64` so the error type does not depend on
/// the scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid interval: end {end} precedes start {start}")]
    InvalidInterval { start: f64, end: f64 },

    #[error("singular matrix in {context}: pivot {pivot} has magnitude {magnitude:e}")]
    Singular {
        context: &'static str,
        pivot: usize,
        magnitude: f64,
    },

    #[error("integration failed at t = {time:e} s: step {step:e} s fell below the minimum")]
    IntegrationFailure { time: f64, step: f64 },

    #[error("quadrature did not converge on [{start:e}, {end:e}] (error estimate {error:e})")]
    QuadratureNonConvergence { start: f64, end: f64, error: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    FitNonConvergence { iterations: usize, last: Vec<f64> },

    #[error("rank-deficient fit: {reason}")]
    RankDeficient { reason: String },

    #[error("degenerate normalization: maximum and minimum reference signals coincide")]
    DegenerateNormalization,

    #[error("insufficient data: {points} points for {params} parameters (need {required})")]
    InsufficientData {
        points: usize,
        params: usize,
        required: usize,
    },

    #[error("overlapping magnetic pulses at t = {time:e} s")]
    OverlappingPulses { time: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
