use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors a CLI should report with the configuration exit code.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
