use thiserror::Error;

use crate::case::ValidationReport;

/// Failures while reading case or overlay files.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing matrix mpc.{0}")]
    MissingSection(&'static str),
    #[error("duplicate bus id {0}")]
    DuplicateBus(u32),
    #[error("{context} references unknown bus {bus}")]
    UnknownBus { bus: u32, context: String },
    #[error("no slack generator")]
    NoSlackGenerator,
    #[error("unsupported bus type {kind} at bus {bus}")]
    UnsupportedBusType { bus: u32, kind: i64 },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate converter id {0}")]
    DuplicateConverter(u32),
    #[error("DC graph disconnected: {0}")]
    DcDisconnected(String),
    #[error("DC island containing node {node} has {count} secondary converters, expected exactly one")]
    SecondaryCount { node: u32, count: usize },
}

/// Failures that prevent a solve from starting.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("validation failed: {0}")]
    Validation(ValidationReport),
    #[error("unsupported option: {0}")]
    Unsupported(&'static str),
    #[error("invalid solver options: {0}")]
    Options(String),
}
