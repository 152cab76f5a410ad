use thiserror::Error;

/// Errors raised by the chain, approximation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A mixing profile ended before the requested threshold was reached.
    #[error("horizon exceeded: d({t_max}) = {d_last} is still above epsilon = {epsilon}")]
    HorizonExceeded { t_max: usize, d_last: f64, epsilon: f64 },

    /// The exact computation would exceed the memory/time guard.
    #[error("infeasible size: {0}")]
    Infeasible(String),

    /// The experiment configuration is invalid.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
