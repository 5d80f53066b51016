use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("truncation too small: tail weight {tail:.3e} exceeds {limit:.1e} (dim {dim}, |alpha| = {amplitude})")]
    Truncation {
        dim: usize,
        amplitude: f64,
        tail: f64,
        limit: f64,
    },

    #[error("state construction produced the zero vector: {0}")]
    ZeroVector(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("invalid parameter `{field}`: {rule}")]
    Parameter { field: String, rule: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("circuit stability condition violated: {0}")]
    Stability(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("classical integration diverged: {0}")]
    Instability(String),

    #[error("integrator failed to converge at t = {time}: {reason}")]
    Convergence { time: f64, reason: String },

    #[error("integrator step error at t = {time}: {reason}")]
    IntegratorStep { time: f64, reason: String },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("ensemble failed: {failed} of {total} trajectories failed (first: {first})")]
    Ensemble {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("configuration error in `{field}`: {rule}")]
    Config { field: String, rule: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            rule: rule.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            rule: rule.into(),
        }
    }
}
