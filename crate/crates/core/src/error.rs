use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resource budget exceeded: {what} needs {needed} but the budget is {budget}")]
    Resource {
        what: String,
        needed: u128,
        budget: u128,
    },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("binding error: {0}")]
    Binding(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("numeric overflow: {0}")]
    Overflow(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("no convergence after {iterations} iterations: {message}")]
    Convergence {
        message: String,
        iterations: usize,
        /// Best iterate reached before giving up.
        best: Vec<f64>,
        best_value: f64,
    },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingArtifact(_) => 2,
            Error::Convergence { .. } => 3,
            Error::Resolution(_) => 4,
            _ => 1,
        }
    }
}
