use thiserror::Error;

/// Errors raised by graph construction, model setup, engines and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange { index: u64, num_nodes: usize },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: u32, dst: u32 },
    #[error("negative or non-finite weight {weight} on edge {src} -> {dst}")]
    NegativeWeight { src: u32, dst: u32, weight: f32 },
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph too large: {0} nodes exceeds the 32-bit column index range")]
    TooManyNodes(usize),
    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegreeSequence(String),
    #[error("invalid moments: mean {mean} must exceed median {median} > 0")]
    InvalidMoments { mean: f64, median: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("storage precision cannot change after the simulation has started")]
    ReconfigureAfterStart,
    #[error("trajectory grids differ")]
    GridMismatch,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed graph file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
