use thiserror::Error;

/// Failure of one command invocation.
#[derive(Debug, Error)]
pub enum CliError {
    /// Flags that are malformed or violate a precondition; nothing was run.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] spc_core::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    /// Short tag printed as `error[<kind>]:` on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(spc_core::Error::Io { .. }) => "io",
            CliError::Core(spc_core::Error::Parse { .. }) => "parse",
            CliError::Core(_) => "input",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
