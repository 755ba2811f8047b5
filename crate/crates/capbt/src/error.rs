//! Crate-wide error types.

use thiserror::Error;

/// Errors raised while building, loading, or driving a tree environment.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("tree structure invalid: {0}")]
    Structure(String),

    #[error("data graph invalid: {0}")]
    DataGraph(String),

    #[error("capability `{0}`: {1}")]
    Capability(String, String),

    #[error("repository: {0}")]
    Repository(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in `{path}`: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("validation failed with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),
}

/// One validation finding, with enough context to locate it.
#[derive(Debug, Clone)]
pub struct Violation {
    /// File the violation was found in.
    pub file: String,
    /// Human-readable location inside the file (node id, json path, or line).
    pub context: String,
    /// What is wrong.
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}: {}", self.file, self.context, self.message)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
