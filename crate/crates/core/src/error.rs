use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative is singular at normalized violation {0}")]
    Singularity(f64),

    #[error("insufficient min-entropy: k = {k} yields no output bits")]
    InsufficientEntropy { k: u64 },

    #[error("design capacity exceeded: {0}")]
    Capacity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bit stream exhausted after {consumed} bits")]
    Exhausted { consumed: u64 },

    #[error("beacon unavailable: {0}")]
    Unavailable(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("session failed: {0}")]
    Session(String),

    #[error("{path}: {source}")]
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

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
