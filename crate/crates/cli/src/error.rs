use thiserror::Error;

/// A failed command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or parameter values (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Missing or malformed files (exit 2).
    #[error("{0}")]
    Data(String),
    /// NaN/Inf during a computation or a failed numeric check (exit 3).
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<pcnn::Error> for CliError {
    fn from(e: pcnn::Error) -> Self {
        match e {
            pcnn::Error::InvalidInput(_) => CliError::Usage(e.to_string()),
            pcnn::Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
