use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{n} free nodes exceed the enumeration limit of {limit}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("spin value {0} is not -1 or +1")]
    InvalidSpin(i64),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("mean {value} at node {node} lies outside [-1, 1]")]
    InvalidMean { node: usize, value: f64 },

    #[error("probability {0} lies outside [0, 1]")]
    InvalidProbability(f64),

    #[error("distribution tables have different support sizes ({0} vs {1})")]
    SupportMismatch(usize, usize),

    #[error("q is zero at state {0} where p is positive")]
    ZeroSupport(usize),

    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid mixture parameters: {0}")]
    InvalidMixture(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
