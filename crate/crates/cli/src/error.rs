use std::fmt;
use std::process::ExitCode;

use eastwalk_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad input, detected before any simulation work.
    Validation { key: String, message: String },
    /// Failure while running.
    Runtime { code: &'static str, message: String },
}

impl CliError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation { .. } => ExitCode::from(2),
            CliError::Runtime { .. } => ExitCode::from(3),
        }
    }

    /// Wraps a library error raised while checking parameters.
    pub fn from_validation(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => CliError::invalid(name, reason),
            Error::InsufficientBudget { reason } => CliError::invalid("replicas", reason),
            other => CliError::invalid("parameters", other.to_string()),
        }
    }
}

fn runtime_code(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid-parameter",
        Error::SiteOutOfRange { .. } => "site-out-of-range",
        Error::SamplingFailure { .. } => "sampling-failure",
        Error::ScheduleExhausted { .. } => "schedule-exhausted",
        Error::BoundaryHit { .. } => "boundary-hit",
        Error::InsufficientBudget { .. } => "insufficient-budget",
        Error::ModelConstruction(_) => "model-construction",
        Error::Horizon { .. } => "horizon",
        Error::Projection { .. } => "projection",
        Error::Numerical(_) => "numerical",
    }
}

impl From<Error> for CliError {
    /// Parameter errors stay validation errors even when a library routine
    /// is the one that notices them.
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => CliError::invalid(name, reason),
            other => CliError::Runtime {
                code: runtime_code(&other),
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime {
            code: "io",
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime {
            code: "io",
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    /// One line, `key=value` fields, for the diagnostics stream.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation { key, message } => {
                write!(f, "error kind=validation key={key} message={message:?}")
            }
            CliError::Runtime { code, message } => {
                write!(f, "error kind=runtime code={code} message={message:?}")
            }
        }
    }
}
