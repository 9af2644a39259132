use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message} (field `{field}`)", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),

    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),

    #[error("node `{node}` has type `{actual}`, expected `{expected}`")]
    TypeMismatch {
        node: String,
        expected: String,
        actual: String,
    },

    #[error("invalid weight {weight} for edge {src} -> {dst}")]
    InvalidWeight { src: String, dst: String, weight: f64 },

    #[error("edge type `{0}` is directed and cannot be decomposed")]
    NotUndirected(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("invalid aspect: {0}")]
    InvalidAspect(String),

    #[error("no score for sub-aspect {0}")]
    MissingScore(String),

    #[error("schema has {0} edge types; candidate enumeration supports at most 20")]
    TooManyEdgeTypes(usize),

    #[error("node types unreachable from anchor `{anchor}`: {}", unreachable.join(", "))]
    Unreachable { anchor: String, unreachable: Vec<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("aspect `{aspect}`: {message}")]
    Bundle { aspect: String, message: String },

    #[error("invalid evaluation input: {0}")]
    Eval(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        file: impl Into<PathBuf>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}
