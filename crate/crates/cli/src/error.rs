use thiserror::Error;

/// A failed command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or arguments (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed files (exit 2).
    #[error("{0}")]
    Io(String),
    /// Some block did not reach its error target in strict mode (exit 3).
    #[error("{0}")]
    QualityUnreached(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::QualityUnreached(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<spmp3d_core::Error> for CliError {
    fn from(e: spmp3d_core::Error) -> Self {
        use spmp3d_core::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Format(_) | E::Checksum(_) => CliError::Io(e.to_string()),
            E::ShapeMismatch { .. }
            | E::InvalidArgument(_)
            | E::NonFinite(_)
            | E::DictionaryMismatch(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
