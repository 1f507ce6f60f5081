use std::fmt;

/// Errors raised by the analytic algorithms, the simulator and the study runner.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A routing row does not sum to one.
    NonStochasticMatrix { row: usize, sum: f64 },
    /// Some node cannot be reached from some other node.
    ReducibleMatrix,
    /// Routing dimension, node count or vector lengths disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A node, moment pair or parameter is out of its admissible range.
    InvalidParameter(String),
    /// Throughput times mean service time exceeds one.
    UtilizationExceedsOne { utilization: f64 },
    /// An operation that is only defined for a single customer was called with K != 1.
    PopulationNotOne { population: u32 },
    /// Root bracketing gave up before a sign change was found.
    NoBracket,
    /// The fixed point is degenerate because the variance of W is zero.
    DegenerateVariance,
    /// The product-form state space is too large to enumerate.
    StateSpaceTooLarge { states: u128, limit: u128 },
    /// An iterative method did not reach its tolerance.
    Nonconvergence { method: &'static str, iterations: usize },
    /// The deterministic flow analysis requires the loading time to exceed the unloading time.
    AssumptionViolated(String),
    /// Configuration could not be parsed; `path` locates the offending field.
    Parse { path: String, message: String },
    /// Configuration parsed but failed validation.
    Validation { field: String, message: String },
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonStochasticMatrix { row, sum } => {
                write!(f, "routing row {} sums to {sum}, expected 1", row + 1)
            }
            Error::ReducibleMatrix => write!(f, "routing matrix is reducible"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UtilizationExceedsOne { utilization } => {
                write!(f, "utilization {utilization} exceeds one")
            }
            Error::PopulationNotOne { population } => {
                write!(f, "operation requires a single customer, got K = {population}")
            }
            Error::NoBracket => write!(f, "could not bracket the fixed point"),
            Error::DegenerateVariance => {
                write!(f, "variance of W is zero; use the deterministic flow model")
            }
            Error::StateSpaceTooLarge { states, limit } => {
                write!(f, "state space has {states} states, limit is {limit}")
            }
            Error::Nonconvergence { method, iterations } => {
                write!(f, "{method} did not converge within {iterations} iterations")
            }
            Error::AssumptionViolated(msg) => write!(f, "assumption violated: {msg}"),
            Error::Parse { path, message } => {
                if path.is_empty() || path == "." {
                    write!(f, "parse error: {message}")
                } else {
                    write!(f, "parse error at `{path}`: {message}")
                }
            }
            Error::Validation { field, message } => {
                write!(f, "invalid configuration field `{field}`: {message}")
            }
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
