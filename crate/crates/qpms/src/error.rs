//! Error type shared across the crate.

/// Crate-wide error type.
///
/// `Config` covers construction-time contract violations (grid guards, bad
/// mode indices, invalid crystal parameters); `Validation` carries a JSON
/// field path for scenario-file diagnostics so the CLI can point at the
/// offending key.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a formatted configuration error.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand for a schema-validation error with a field path.
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
