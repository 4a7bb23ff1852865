use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or plan parameter is out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Random topology generation gave up after exhausting its retries.
    #[error("topology generation failed: {0}")]
    Generation(String),

    /// Explicitly supplied data (gains, availability, profiles) is malformed.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An operation was called with arguments violating its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration budget exceeded: {profiles} joint profiles > budget {budget}")]
    Budget { profiles: f64, budget: f64 },

    /// A built-in fixture failed its construction self-check.
    #[error("fixture self-check failed: {0}")]
    Fixture(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
