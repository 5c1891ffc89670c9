use thiserror::Error;

use rdseg_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const SCHEMA: i32 = 2;
    pub const IO: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or malformed input data.
    #[error("{0}")]
    Schema(String),

    #[error("{0}")]
    Io(String),

    /// An estimator or sampler failed on valid input.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => exit::SCHEMA,
            CliError::Io(_) => exit::IO,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    /// Prefixes the message with `context`, keeping the category.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Schema(m) => CliError::Schema(format!("{context}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Parameter(_) | CoreError::Format(_) | CoreError::Json(_) => CliError::Schema(msg),
            CoreError::Io(_) | CoreError::Csv(_) => CliError::Io(msg),
            CoreError::Domain { .. }
            | CoreError::DegenerateData(_)
            | CoreError::Optimization { .. }
            | CoreError::Sampler { .. } => CliError::Numerical(msg),
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
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Schema(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
