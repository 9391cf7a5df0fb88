//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Configuration file or semantic validation failure.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key '{key}' in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("duplicate key '{key}' in section [{section}]")]
    DuplicateKey { section: String, key: String },
    #[error("invalid value for '{key}': {reason}")]
    InvalidValue { key: String, reason: String },
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

/// Entity lookup and settlement failures.
#[derive(Debug, Error)]
pub enum WorldError {
    #[error("no predator with id {0}")]
    UnknownPredator(u64),
    #[error("predator {0} is dead")]
    DeadPredator(u64),
}

/// Q-network input and numeric failures.
#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("expected input of length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Binary decode failure for snapshots and checkpoints.
///
/// Every variant carries the byte offset at which decoding stopped.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic at offset {offset}: expected {expected}")]
    BadMagic { offset: usize, expected: &'static str },
    #[error("unsupported format version {version} at offset {offset}")]
    BadVersion { offset: usize, version: u32 },
    #[error("truncated input at offset {offset}: need {need} more bytes")]
    Truncated { offset: usize, need: usize },
    #[error("invalid field at offset {offset}: {reason}")]
    InvalidField { offset: usize, reason: String },
    #[error("trailing garbage: {extra} unread bytes at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
}

/// Time-series and ODE analysis failures.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("populations must be positive, got p={p}, q={q}")]
    NonPositivePopulation { p: f64, q: f64 },
    #[error("integration produced a non-finite state at step {step}")]
    Diverged { step: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("no dominant cycle found in series")]
    NoCycle,
    #[error("row {row}: {reason}")]
    BadSeries { row: usize, reason: String },
}

/// CSV parse failure; `line` is 1-based and counts the header.
#[derive(Debug, Error)]
#[error("line {line}: {reason}")]
pub struct CsvError {
    pub line: usize,
    pub reason: String,
}

/// Top-level simulation error, as surfaced by the engine.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
