use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("{0} non-root photons exceed the enumeration bound of {1}")]
    TooLarge(usize, usize),
    #[error("tree not generable by the {variant} variant: {reason}")]
    NotGenerable { variant: String, reason: String },
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("delay {tau} is below the minimal feasible delay: {reason}")]
    InfeasibleDelay { tau: u64, reason: String },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty search space")]
    EmptySpace,
}

pub type Result<T> = std::result::Result<T, Error>;
