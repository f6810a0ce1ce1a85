use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("word {0} is not freely reduced")]
    NotReduced(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
    #[error("invalid group context: {0}")]
    InvalidContext(String),
    #[error("{0} out of range")]
    OutOfRange(String),
    #[error("cylinder stem of word-length {stem_len} is too shallow for an element of word-length {element_len}")]
    CylinderTooShallow { stem_len: usize, element_len: usize },
    #[error("double shadows do not cover the boundary square at R = {radius}; uncovered pair {witness}")]
    CoverFailed { radius: String, witness: String },
    #[error("budget exceeded: {requested} elements requested, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },
    #[error("{0} did not converge")]
    NotConverged(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
