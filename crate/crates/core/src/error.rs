//! Error type shared across the toolkit.

/// Error categories map onto the CLI exit codes: I/O and schema problems
/// are exit 1, validation failures are exit 2, internal invariant
/// violations are exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Input file does not have the expected shape (missing column,
    /// malformed GeoJSON, unreadable CSV).
    #[error("schema error: {0}")]
    Schema(String),

    /// Input was readable but violates a dataset invariant
    /// (duplicate ids, counts exceeding population, dangling city_id).
    #[error("validation error: {0}")]
    Validation(String),

    /// Caller passed an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An invariant the toolkit itself guarantees was broken.
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
