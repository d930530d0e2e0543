use thiserror::Error;

/// Crate-wide error type. Variants are grouped so callers (notably the CLI)
/// can map them onto distinct exit codes: parse/data errors vs. infeasible
/// queries vs. corrupt artifacts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("edge {edge} references unknown vertex {vertex}")]
    EdgeEndpoint { edge: i64, vertex: i64 },

    #[error("edge {edge} has negative weight {weight}")]
    NegativeWeight { edge: i64, weight: f64 },

    #[error("unknown vertex id {0}")]
    UnknownVertex(i64),

    #[error("unknown edge id {0}")]
    UnknownEdge(i64),

    #[error("unknown trajectory id {0}")]
    UnknownTrajectory(i64),

    #[error("symbol {0} is not part of the alphabet")]
    UnknownSymbol(i64),

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("ambiguous edge between vertices {src} and {dst}: parallel edges present")]
    AmbiguousEdge { src: i64, dst: i64 },

    #[error("invalid cost model configuration: {0}")]
    CostModel(String),

    #[error("infeasible query: {0}")]
    Infeasible(String),

    #[error("selection instance too large for exact solving: {0} items (limit {1})")]
    ExactTooLarge(usize, usize),

    #[error("corrupt artifact: {0}")]
    Corrupt(String),

    #[error("artifact format version {found} not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("index is not temporally ordered")]
    NotTemporal,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
