use thiserror::Error;

/// Errors produced by graph construction, solvers and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    DisconnectedGraph(usize),
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    NonpositiveEdgeLength { edge: usize, length: f64 },
    #[error("edge {edge}: {reason}")]
    InvalidEdge { edge: usize, reason: String },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("no boundary vertices")]
    EmptyBoundary,
    #[error("domain contains no grid point")]
    EmptyDomain,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("source set is empty")]
    EmptySourceSet,
    #[error("vertex {0} out of range")]
    UnknownVertex(usize),
    #[error("{vertices} vertices exceed the all-pairs limit {limit} and no sample budget was given")]
    BudgetExceeded { vertices: usize, limit: usize },
    #[error("effective boundary is empty")]
    EmptyEffectiveBoundary,
    #[error("no admissible neighbor of vertex {vertex} within radius {radius}")]
    EmptyNeighborhood { vertex: usize, radius: f64 },
    #[error("radii must be positive and span at least one decade")]
    DegenerateRadii,
    #[error("need at least {needed} pairs inside the fit window, got {got}")]
    InsufficientPairs { needed: usize, got: usize },
    #[error("weight field carries no L-infinity bound")]
    MissingLinfTag,
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("{0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
