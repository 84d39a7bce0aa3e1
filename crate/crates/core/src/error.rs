use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is out of its domain. `field` is a dotted path.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("{func}: argument out of domain ({reason})")]
    Domain { func: &'static str, reason: String },

    /// An iterative routine ran out of budget. The best estimate is kept so
    /// callers can decide whether it is usable.
    #[error("{what} did not converge within {evals} evaluations (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        what: &'static str,
        evals: usize,
        estimate: f64,
        error: f64,
    },

    #[error("configuration parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn domain(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            func,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
