use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid parameters, schema violations, size limits: caller mistakes.
    #[error("configuration error: {0}")]
    Config(String),
    /// Numerical failures detected at run time (norm drift, fit breakdown).
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code convention: 2 for bad input, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}
