//! Error type shared by every module.
//!
//! Two failure classes matter to callers (and map to CLI exit codes):
//! invalid input ([`Error::Validation`], exit 2) and a numerical stage that
//! could not complete ([`Error::Numerical`], exit 3, tagged with the stage
//! that failed).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any computation ran.
    #[error("validation: {0}")]
    Validation(String),

    /// A numerical stage failed; `stage` names the pipeline step.
    #[error("numerical error [{stage}]: {message}")]
    Numerical {
        stage: &'static str,
        message: String,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for a validation failure.
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Shorthand for a numerical failure tagged with its pipeline stage.
    pub fn numerical(stage: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
