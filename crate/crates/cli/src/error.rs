use std::fmt;
use std::io;
use std::path::Path;
use std::process::ExitCode;

/// CLI failure, split by exit code: 1 for invalid input, 2 for I/O.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Io(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<roomrisk_core::Error> for CliError {
    fn from(err: roomrisk_core::Error) -> Self {
        if err.is_io() {
            CliError::Io(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}
