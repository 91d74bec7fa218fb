use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavenumber {k} outside retained range |k| <= {n_modes}")]
    WavenumberOutOfRange { k: i64, n_modes: usize },

    #[error("amplitudes at k = {k} and k = {neg} violate conjugate symmetry")]
    ConjugateConflict { k: i64, neg: i64 },

    #[error("field resolutions differ: {left} vs {right} modes")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("field periods differ: {left} vs {right}")]
    PeriodMismatch { left: f64, right: f64 },

    #[error("non-finite coefficient at k = {k}")]
    NonFinite { k: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gevrey weight exponent {exponent:.3} exceeds cap {cap}; norm saturated")]
    Saturated { exponent: f64, cap: f64 },

    #[error("parameter pair is not comparable: {0}")]
    NotComparable(String),

    #[error("time {t} outside admissible window [0, {window})")]
    OutsideWindow { t: f64, window: f64 },

    #[error("quadrature did not converge: estimated error {estimate:e} after {intervals} intervals")]
    QuadratureFailed { estimate: f64, intervals: usize },

    #[error("trajectory ends at t = {last} but the ladder samples t = {needed}")]
    TrajectoryTooShort { last: f64, needed: f64 },

    #[error("state has system tag {found}, expected {expected}")]
    WrongSystem { expected: String, found: String },

    #[error("coefficients exceeded overflow cap at t = {t}; last valid time {last_valid}")]
    BlowUp { t: f64, last_valid: f64 },

    #[error("fewer than 4 modes above the noise floor ({usable} usable)")]
    BelowNoiseFloor { usable: usize },

    #[error("initial norm is zero; lifespan is unbounded")]
    ZeroInitialNorm,
}
