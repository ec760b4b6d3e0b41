use std::path::PathBuf;

use chainfair_core::Error as ModelError;
use thiserror::Error;

/// Exit status for success.
pub const EXIT_OK: u8 = 0;
/// Exit status for an output write failure.
pub const EXIT_IO: u8 = 1;
/// Exit status for bad flags, config keys or input files.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for a solver or optimizer failure.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: ModelError,
    },
    #[error("reading {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn model(context: impl Into<String>, source: ModelError) -> Self {
        CliError::Model {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Input { .. }
            | CliError::Csv(_)
            | CliError::Config { .. } => EXIT_USAGE,
            CliError::Model { source, .. } => match source {
                ModelError::NoConvergence { .. } | ModelError::Singular | ModelError::FitFailed => {
                    EXIT_NUMERICAL
                }
                _ => EXIT_USAGE,
            },
            CliError::Output(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a context string to a model result.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for chainfair_core::error::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| CliError::model(what, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_map_to_three() {
        let e = CliError::model("solve", ModelError::Singular);
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let e = CliError::model(
            "solve",
            ModelError::NoConvergence {
                iterations: 5,
                residual: 0.1,
                last: vec![],
            },
        );
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        assert!(e.to_string().contains("residual"));
    }

    #[test]
    fn precondition_errors_are_usage() {
        let e = CliError::model(
            "solve",
            ModelError::Domain {
                what: "alpha",
                value: 2.0,
            },
        );
        assert_eq!(e.exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
    }
}
