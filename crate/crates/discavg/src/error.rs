use discavg_core::Error as CoreError;

/// Errors surfaced by the command-line driver, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) | CliError::Format(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Domain(core_message(&e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

/// Message without the category prefix, for errors that are rethrown as
/// usage errors.
pub fn core_message(e: &CoreError) -> String {
    match e {
        CoreError::Structural(m) | CoreError::Domain(m) | CoreError::Capability(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Turns a core error raised while validating flags into a usage error.
pub fn as_usage(e: CoreError) -> CliError {
    CliError::Usage(core_message(&e))
}
