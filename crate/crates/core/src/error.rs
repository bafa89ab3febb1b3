use alloc::string::String;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("observation has zero probability under the prior")]
    ZeroProbabilityObservation,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("posterior pair is singular (q1 = q2)")]
    SingularPair,
    #[error("posterior pair is not Bayes-plausible: prior {p0} is not between {q1} and {q2}")]
    OutOfRange { q1: f64, q2: f64, p0: f64 },
    #[error("enumeration of {size} sequences exceeds the cap of {cap}")]
    EnumerationTooLarge { size: u128, cap: u128 },
}
