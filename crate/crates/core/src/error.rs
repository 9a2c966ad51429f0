use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid variable space: {0}")]
    InvalidSpace(String),

    #[error("value {value} out of range for variable `{var}` (cardinality {card})")]
    ValueOutOfRange { var: String, value: usize, card: usize },

    #[error("event members have different domains")]
    MixedDomains,

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbability(String),

    #[error("variable sets must be disjoint: {0}")]
    Overlap(String),

    #[error("{0}")]
    Precondition(String),

    #[error("causal relation is cyclic (Axiom 2 violated): {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("table is not a distribution: {0}")]
    NotNormalized(String),

    #[error("belief family is incomplete: {0}")]
    MissingPolicy(String),

    #[error("noise value {0} is outside [0, 1)")]
    NoiseOutOfRange(f64),

    #[error("sweep over {vars} variables exceeds the cap of {cap}; raise the cap explicitly")]
    TooLarge { vars: usize, cap: usize },

    #[error("utility is not strictly increasing on the queried payoffs ({0} vs {1})")]
    NonMonotoneUtility(f64, f64),

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
