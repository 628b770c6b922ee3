//! Errors reported by the command-line tool, with a machine-readable code and exit status.

use serde_json::{json, Value};
use thiserror::Error;

/// Exit status for malformed input and violated invariants.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for well-formed input whose conditioning event has probability zero.
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Clone, Debug, Error, PartialEq)]
#[error("{message}")]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    /// JSON path or source position of the offending input.
    pub field: Option<String>,
    pub exit: i32,
}

impl CliError {
    pub fn validation(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
            field: None,
            exit: EXIT_VALIDATION,
        }
    }

    /// Attaches a location unless a more precise one is already set.
    pub fn at(mut self, field: &str) -> Self {
        if self.field.is_none() {
            self.field = Some(field.to_string());
        }
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "code": self.code,
                "message": self.message,
                "field": self.field,
                "exit_code": self.exit,
            }
        })
    }
}

impl From<twotime_core::Error> for CliError {
    fn from(e: twotime_core::Error) -> Self {
        CliError {
            code: e.code(),
            message: e.to_string(),
            field: None,
            exit: if e.is_domain() { EXIT_DOMAIN } else { EXIT_VALIDATION },
        }
    }
}
