use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("map parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("map dimension error on line {line}: expected {expected} cells, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid {which} point ({x}, {y}): not collision-free")]
    InvalidEndpoint { which: &'static str, x: f64, y: f64 },

    #[error("no path found within {iterations} iterations")]
    PlanningFailed { iterations: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("reference exhausted: need {needed} states, have {available}")]
    ReferenceExhausted { needed: usize, available: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate target: target coincides with the vehicle position")]
    DegenerateTarget,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
