use std::path::PathBuf;

/// Errors produced anywhere in the engine.
///
/// Variants are grouped so a caller (e.g. the CLI) can map them onto a small
/// set of exit categories: configuration, ingestion, divergence, IO and
/// corrupt checkpoints.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("failed to ingest {path}: {message}")]
    Ingest { path: PathBuf, message: String },

    #[error("image too small: {0}")]
    TooSmall(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("evaluation error: empty test set")]
    EmptyTestSet,

    #[error("corrupt checkpoint ({field}): {message}")]
    CorruptCheckpoint { field: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Helper for the frequent shape-mismatch construction.
    pub fn shape_mismatch(context: &str, expected: &[usize], got: &[usize]) -> Self {
        Error::ShapeMismatch {
            context: context.to_string(),
            expected: expected.to_vec(),
            got: got.to_vec(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
