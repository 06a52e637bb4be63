use std::fmt;

use corrgap::ErrorKind;

/// Everything that can stop a command, with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid config file.
    Config(String),
    /// Failure reading or writing an artifact.
    Io(String),
    Core(corrgap::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            },
        }
    }

    pub(crate) fn io(what: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{what}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<corrgap::Error> for CliError {
    fn from(e: corrgap::Error) -> Self {
        CliError::Core(e)
    }
}
