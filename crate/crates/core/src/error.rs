use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent configuration; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A least-squares design matrix lost rank.
    #[error("degenerate fit: regressor matrix has rank {rank}, expected {expected}")]
    DegenerateFit { rank: usize, expected: usize },

    #[error("training failed at iteration {iteration}: {message}")]
    Training { iteration: usize, message: String },

    /// A pipeline stage failed on too many samples to continue.
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("model format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
