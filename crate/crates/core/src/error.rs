use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unit index {index} out of range for a map of {len} units")]
    UnitOutOfRange { index: usize, len: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row} has no present component")]
    AllMissing { row: usize },

    #[error("observation has no present component")]
    EmptyObservation,

    #[error("{algorithm} does not accept missing values; use som or scl, or drop incomplete rows")]
    MissingDataUnsupported { algorithm: &'static str },

    #[error("column `{column}` has zero variance over its present entries")]
    ZeroVariance { column: String },

    #[error("need {needed} complete rows, only {available} available")]
    InsufficientRows { needed: usize, available: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("zero marginal: {0}")]
    ZeroMarginal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
