use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading, validating, or running a scenario.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("scenario parse error at line {line}, column {column} ({field}): {message}")]
    ScenarioParse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("trace contains no rate bins")]
    EmptyTrace,

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("inconsistent gap configuration ({first}, {second}): {reason}")]
    InconsistentConfig {
        first: String,
        second: String,
        reason: String,
    },

    #[error("invariant violated at {at_ms} ms: {message}")]
    Invariant { at_ms: u64, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
