use thiserror::Error;

/// Errors produced by cascade construction, encoding, modeling, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cascade")]
    EmptyCascade,
    #[error("duplicate actor: {0}")]
    DuplicateActor(String),
    #[error("unreachable node: {0}")]
    UnreachableNode(String),
    #[error("malformed run: {0}")]
    MalformedRun(i64),
    #[error("unbalanced traversal")]
    UnbalancedTraversal,
    #[error("degenerate sequence")]
    DegenerateSequence,
    #[error("insufficient data: no sequence of length >= {0}")]
    InsufficientData(usize),
    #[error("disconnected graph")]
    DisconnectedGraph,
    #[error("insufficient samples")]
    InsufficientSamples,
    #[error("degenerate labels: training set contains a single class")]
    DegenerateLabels,
    #[error("too few samples per fold: {per_class} per class, {folds} folds")]
    TooFewSamplesPerFold { per_class: usize, folds: usize },
    #[error("empty collection")]
    EmptyCollection,
    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("column length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
