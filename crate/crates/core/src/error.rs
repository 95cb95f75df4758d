use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading or validating a TempCP-net model document.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("model error at line {line} in block `{block}`: {message}")]
pub struct ModelError {
    pub line: usize,
    pub block: String,
    pub message: String,
}

impl ModelError {
    pub(crate) fn new(line: usize, block: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            block: block.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("value {value} of attribute `{attribute}` lies outside its semantic domain")]
    Domain { attribute: String, value: f64 },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown outcome {0:?}")]
    UnknownOutcome(Vec<usize>),

    #[error("preference graph contains a cycle")]
    Cyclic,

    #[error("cannot build an index over an empty outcome set")]
    EmptyIndex,

    #[error("interval {index} out of range (model has {count} intervals)")]
    IntervalOutOfRange { index: usize, count: usize },

    #[error("attribute schema mismatch: {0}")]
    Schema(String),

    #[error("invalid request `{id}`: {reason}")]
    InvalidRequest { id: String, reason: String },

    #[error("request set parse error at line {line}: {message}")]
    RequestFormat { line: usize, message: String },

    #[error("invalid workload spec: {0}")]
    Workload(String),

    #[error("{composer} supports at most {cap} requests, got {got}")]
    CapExceeded {
        composer: &'static str,
        cap: usize,
        got: usize,
    },

    #[error("interval {interval} has {count} concurrent candidates; the action encoding supports at most {max}")]
    TooManyCandidates {
        interval: usize,
        count: usize,
        max: usize,
    },

    #[error("interval {interval} admits more than {max} feasible configurations")]
    ActionSpace { interval: usize, max: usize },

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("action is infeasible in interval {0}")]
    InfeasibleAction(usize),

    #[error("clustering needs at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("cophenetic correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("annotation requires a non-empty request set")]
    EmptyRequestSet,

    #[error("library entry {index} ({path}) is corrupt: {reason}")]
    CorruptEntry {
        index: usize,
        path: PathBuf,
        reason: String,
    },

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
