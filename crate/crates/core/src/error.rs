use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the channel model, statistics and optimizer.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input (empty sequences, mismatched lengths, ragged grids).
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// A numeric argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The constraint set admits no feasible individual within the retry budget.
    #[error(
        "constraint set infeasible: {constraint} could not be satisfied after {attempts} attempts"
    )]
    Infeasible {
        constraint: &'static str,
        attempts: usize,
    },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Rows of a CSV file that could not be parsed.
    #[error("{path}: malformed rows at lines {lines:?}: {detail}")]
    MalformedRows {
        path: String,
        lines: Vec<usize>,
        detail: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
