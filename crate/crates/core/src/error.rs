use thiserror::Error;

/// Errors raised by system construction and the verdict machinery.
///
/// A verdict that simply does not hold is *not* an error; it is reported
/// through [`crate::verdict::Outcome`]. Errors are contract violations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynError {
    #[error("negative iterate requested on a non-invertible system")]
    NegativeIterateOnNonInvertible,
    #[error("point outside the system domain: {0}")]
    DomainViolation(String),
    #[error("points belong to different systems")]
    MixedSystemPoints,
    #[error("system `{system}` lacks capability `{capability}`")]
    CapabilityMissing {
        system: String,
        capability: &'static str,
    },
    #[error("point is not periodic within the tested bound")]
    NotPeriodic,
    #[error("period {period} is not prime: f^{divisor}(p) = p")]
    PeriodNotPrime { period: u32, divisor: u32 },
    #[error("region is empty")]
    EmptyRegion,
    #[error("two-sided window requires an invertible system")]
    NonInvertibleTwoSided,
    #[error("operation requires an invertible system")]
    NonInvertible,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cover misses a sampled point: {0}")]
    NotACover(String),
    #[error("measure model does not match the system alphabet")]
    MeasureSystemMismatch,
    #[error("gap {gap} is below the transition bound {needed}")]
    GapTooSmall { gap: u64, needed: u64 },
    #[error("no connecting orbit piece found between segment {segment} and the next")]
    ConnectorNotFound { segment: usize },
    #[error("segment windows demand conflicting symbols at coordinate {coordinate}")]
    WindowOverlap { coordinate: i64 },
    #[error("search budget exceeded ({0})")]
    BudgetExceeded(String),
    #[error("no periodic point found in the neighbourhood")]
    NoPeriodicInNeighborhood,
    #[error("no transitive visit found")]
    NoTransitiveVisit,
    #[error("tracers {first} and {second} are not separated")]
    SeparationFailure { first: usize, second: usize },
    #[error("no tracer available for tuple {0}")]
    TracerUnavailable(usize),
    #[error("invalid pseudo-orbit: step {index} misses the tolerance")]
    InvalidPseudoOrbit { index: usize },
    #[error("invalid specification segments: {0}")]
    InvalidSegments(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, DynError>;
