use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or a violated precondition. The string names the
    /// offending key or invariant.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("iteration limit reached after {iterations} iterations (residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("control schedule ends at t={horizon} but integration was requested up to t={requested}")]
    Horizon { horizon: f64, requested: f64 },

    #[error("counterexample window half-width {window} too small; need at least {required}")]
    WindowTooSmall { window: f64, required: f64 },

    #[error("t={t} exceeds the trusted region of the arrival-time field (t <= {trusted})")]
    TrustRegion { t: f64, trusted: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status for the CLI: 2 for configuration problems, 3 for
    /// numerical non-convergence, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::WindowTooSmall { .. } | Error::TrustRegion { .. } => 2,
            Error::IterationLimit { .. } => 3,
            _ => 1,
        }
    }
}
