use thiserror::Error;

/// Violation of an internal contract between modules. Seeing one of these
/// means a policy produced an impossible result.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("opportunistic cache holds {capacity} items, selection returned {requested}")]
    CapacityExceeded { capacity: usize, requested: usize },
}

/// Rejected simulation configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
    #[error("{field} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("sampling period {period} s does not divide duration {duration} s")]
    SamplingPeriod { period: u64, duration: u64 },
    #[error("speed range [{min}, {max}] is empty")]
    SpeedRange { min: f64, max: f64 },
    #[error("grid {cols}x{rows} cannot host {communities} non-adjacent home cells")]
    GridTooSmall { cols: usize, rows: usize, communities: usize },
    #[error("scenario needs {needed} travellers per community but communities have {nodes} nodes")]
    TooFewNodes { needed: usize, nodes: usize },
    #[error("dynamics event at {at} s is not before the end of the run ({duration} s)")]
    EventAfterEnd { at: u64, duration: u64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no series to average")]
    Empty,
    #[error("series {index} is sampled at different instants than series 0")]
    MismatchedInstants { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("group sizes and probabilities differ in length ({sizes} vs {probs})")]
    Misaligned { sizes: usize, probs: usize },
    #[error("social groups are empty")]
    EmptyGroups,
}
