use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solution length {found} does not match instance size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("objective vectors have different arity ({0} vs {1})")]
    ArityMismatch(usize, usize),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity {capacity} exceeds the table limit {limit}")]
    CapacityTooLarge { capacity: u64, limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
