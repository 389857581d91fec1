use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate article id `{0}`")]
    DuplicateArticle(String),

    #[error("query pair `{id}`: {msg}")]
    QueryPair { id: String, msg: String },

    #[error("xml: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{kind} format version mismatch: file has `{found}`, expected `{expected}`")]
    Version {
        kind: &'static str,
        found: String,
        expected: String,
    },

    #[error("missing {kind} artifact {path}")]
    MissingArtifact { kind: &'static str, path: PathBuf },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("feature {0} needs a model that has not been fitted")]
    MissingModel(&'static str),

    #[error("unknown feature kind `{0}`")]
    UnknownFeature(String),

    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: u32, weight: f64 },

    #[error("non-finite feature value in pair {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0}")]
    Data(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
