use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("class count must be at least 1")]
    NoClasses,
    #[error("class count {expected} does not match {field} length {actual}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("class probability mu[{index}] = {value} must be positive")]
    NonPositiveProbability { index: usize, value: f64 },
    #[error("class probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
    #[error("ring size K[{index}] must be at least 1")]
    ZeroRingSize { index: usize },
    #[error(
        "ring sizes must be nondecreasing: K[{index}] = {current} < K[{prev_index}] = {previous}"
    )]
    NonMonotoneRings {
        index: usize,
        prev_index: usize,
        previous: u64,
        current: u64,
    },
    #[error("largest ring size {largest} must be smaller than pool size {pool}")]
    RingNotBelowPool { largest: u64, pool: u64 },
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("target c = {target_c} is infeasible at n = {n}, P = {pool}: best achievable c_n = {best_c}")]
    Infeasible {
        n: u64,
        pool: u64,
        target_c: f64,
        best_c: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
