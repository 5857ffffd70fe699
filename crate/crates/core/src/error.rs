use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("gap law is not in the domain of attraction of a stable law: {0}")]
    NotInDomainOfAttraction(String),

    #[error("path not resolved down to scale {requested:e}; finest resolved scale is {finest:e}")]
    Unresolved { requested: f64, finest: f64 },

    #[error("tolerance not achieved: {0}")]
    Tolerance(String),

    #[error("orbit has not yet recurred by time {0}")]
    NotYetRecurrent(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invariant<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invariant(msg.into()))
}
