use std::fmt;

use synthop_core::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Failure of a whole command, carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    /// Same message, different exit code.
    pub fn with_code(self, code: i32) -> Self {
        CliError { code, ..self }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotInformative(_) | Error::Infeasible(_) | Error::EmptySet(_) => EXIT_NEGATIVE,
        Error::Solver(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(format!("json error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
