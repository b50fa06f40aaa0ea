use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("function `{name}` takes {expected} argument(s), got {got} (offset {pos})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        pos: usize,
    },

    /// Evaluation left the domain of definition. `expr` is the offending subexpression.
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("singular metric at {point:?} (|det g| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("rejection sampling found {found} of {wanted} points in {attempts} attempts")]
    Sampling {
        found: usize,
        wanted: usize,
        attempts: usize,
    },

    #[error("degree error: {0}")]
    Degree(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A precondition of a probe or context failed (e.g. a KV context built on a curved connection).
    #[error("setup failed: {0}")]
    Setup(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("scenario `{scenario}`: {msg}")]
    Scenario { scenario: String, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
