use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar fell outside the domain of the quantity it was meant to be.
    #[error("{quantity} = {value} is outside its domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Majority vote requires an odd number of voters.
    #[error("sensor count {0} is even; majority vote needs an odd count")]
    EvenSensorCount(u64),

    #[error("capacity {lambda} at rate {rate} admits no sensor (lambda/rate < 1)")]
    NoSensorFits { lambda: f64, rate: f64 },

    #[error("block length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("rate {rate} is outside the model domain [{min}, {max}]")]
    RateOutOfRange { rate: f64, min: f64, max: f64 },

    #[error("line {line}: {reason}")]
    InvalidTable { line: usize, reason: String },

    #[error("distortion table has no knots")]
    EmptyTable,

    /// A ratio or logarithm would have to divide by a zero error probability.
    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("bit budget exceeded: {requested} bit-slots requested, cap is {cap}")]
    BudgetExceeded { requested: u128, cap: u128 },

    #[error("model '{model}' does not support {what}")]
    Unsupported { model: String, what: &'static str },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("worker pool: {0}")]
    WorkerPool(String),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            domain,
        }
    }
}
