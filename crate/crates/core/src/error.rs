use thiserror::Error;

/// Errors raised by graph construction, measure validation and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("edge ({src}, {dst}) references a node outside 0..{n}")]
    NodeOutOfRange { src: usize, dst: usize, n: usize },

    #[error("edge ({src}, {dst}) is a self-loop; retention is modelled by node storage")]
    SelfLoop { src: usize, dst: usize },

    #[error("edge ({src}, {dst}) has invalid weight {weight} (must be finite and >= 0)")]
    InvalidWeight { src: usize, dst: usize, weight: f64 },

    #[error("edge ({src}, {dst}) has invalid capacity {capacity} (must be >= 0)")]
    InvalidCapacity { src: usize, dst: usize, capacity: f64 },

    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },

    #[error("edge ({src}, {dst}) does not exist")]
    EdgeNotFound { src: usize, dst: usize },

    #[error("storage vector has length {got}, expected {expected}")]
    StorageLength { expected: usize, got: usize },

    #[error("node {node} has invalid storage {value} (must be >= 0)")]
    InvalidStorage { node: usize, value: f64 },

    #[error("graph is not connected (node {node} unreachable from node 0 ignoring directions)")]
    Disconnected { node: usize },

    #[error("no directed path from node {from} to node {to}")]
    UnreachablePair { from: usize, to: usize },

    #[error("support index set is empty")]
    EmptySupport,

    #[error("invalid support index set: {0}")]
    InvalidSupport(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("reference matrix has a nonpositive entry at ({0}, {1})")]
    NonpositiveReference(usize, usize),

    #[error("log_sum_exp of an empty list")]
    EmptyInput,

    #[error("invalid log-domain entry {value} at ({row}, {col}): +inf and NaN are not representable")]
    InvalidLogEntry { row: usize, col: usize, value: f64 },

    #[error("simplex violation: {0}")]
    SimplexViolation(String),

    #[error("row {row} requires mass {target} but has no admissible destination")]
    InfeasibleRow { row: usize, target: f64 },

    #[error("solver did not converge within {0} iterations")]
    MaxInnerIterations(usize),

    #[error("mass drifted to {sum} after a converged step (tolerance {tolerance})")]
    MassDrift { sum: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
