use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs are individually valid but do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// A precondition that the caller promised was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("coefficient of variation undefined: mean is zero but variance is {variance}")]
    UndefinedCv { variance: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e}, last estimate {last})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last: f64,
    },

    /// Experiment configuration failed validation; one entry per offending field.
    #[error("invalid experiment configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
