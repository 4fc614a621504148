use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("duplicate permutation in set at positions {0} and {1}")]
    DuplicatePermutation(usize, usize),

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("duplicate Zadoff-Chu root {0}")]
    DuplicateRoot(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
