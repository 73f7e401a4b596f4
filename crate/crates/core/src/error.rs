use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate edge between nodes {0} and {1}")]
    DuplicateEdge(String, String),

    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(String, String),

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("partition covers {got} nodes but graph has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("merged node sets overlap at node {0}")]
    OverlappingSets(usize),

    #[error("invalid branch: {0}")]
    InvalidBranch(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("brute-force enumeration refused for n = {0} (limit {1})")]
    TooLarge(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
