use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("negative density {value} in cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },
    #[error("reaction has no zero crossing at x = {x}")]
    NoZeroCrossing { x: f64 },
    #[error("value {z} is not above inf F' = {inf} at x = {x}")]
    BelowDomain { z: f64, inf: f64, x: f64 },
    #[error("root bracket failure: {0}")]
    Bracket(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("node budget exceeded: {nodes} nodes (max {max})")]
    NodeBudget { nodes: usize, max: usize },
    #[error("solver failure at step {step}: {message}")]
    StepFailure { step: usize, message: String },
    #[error("newton failure: {0}")]
    Newton(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("constraint ({assumption}) violated: {message}")]
    Constraint { assumption: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
