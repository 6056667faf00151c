use std::path::PathBuf;

use thiserror::Error;

use crate::network::RankReport;
use crate::topology::{Edge, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("topology has no vertices")]
    EmptyTopology,

    #[error("vertex {0} is listed more than once")]
    DuplicateVertex(VertexId),

    #[error("edge {0} is listed more than once")]
    DuplicateEdge(Edge),

    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(VertexId),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("unknown edge {0}")]
    UnknownEdge(Edge),

    #[error("non-positive dimension at {0}")]
    NonPositiveDimension(String),

    #[error("edge {0} closes a cycle")]
    CycleDetected(Edge),

    #[error("graph is disconnected: vertices {unreachable:?} are not reachable from {from}")]
    Disconnected {
        from: VertexId,
        unreachable: Vec<VertexId>,
    },

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFiniteEntries,

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("local tensor at vertex {vertex}: {reason}")]
    LocalTensorMismatch { vertex: VertexId, reason: String },

    #[error("intermediate of {required} scalars exceeds the memory budget of {budget}")]
    MemoryBudgetExceeded { required: usize, budget: usize },

    #[error("local certificate and global edge-cut ranks disagree on edges {edges:?}")]
    InconsistencyDetected {
        edges: Vec<Edge>,
        report: Box<RankReport>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed binary tensor: {0}")]
    BadBinary(String),
}
