use homvis_core::HomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] HomError),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    InvalidSweep(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Error name printed on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::InvalidConfig(_) => "InvalidConfig",
            CliError::InvalidSweep(_) => "InvalidSweep",
            CliError::Io(_) => "IoError",
        }
    }

    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::InvalidConfig(_) | CliError::InvalidSweep(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
