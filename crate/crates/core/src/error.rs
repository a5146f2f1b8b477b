use thiserror::Error;

use crate::network::{Edge, NodeId};

#[derive(Debug, Error)]
pub enum PfarError {
    #[error("edge ({src}, {dst}) is a self-loop")]
    SelfLoop { src: NodeId, dst: NodeId },
    #[error("edge ({src}, {dst}) is declared more than once")]
    DuplicateEdge { src: NodeId, dst: NodeId },
    #[error("edge ({src}, {dst}) has zero capacity")]
    ZeroCapacity { src: NodeId, dst: NodeId },
    #[error("node {node} is out of range for a network of {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("flow {flow}: source and destination are both node {node}")]
    SameEndpoints { flow: usize, node: NodeId },
    #[error("flow {flow} requires zero bandwidth")]
    ZeroBandwidth { flow: usize },
    #[error("header {header:#x} does not fit in {bits} bits")]
    HeaderTooWide { header: u64, bits: u32 },
    #[error("maximum path length must be at least 1")]
    ZeroPathLength,
    #[error("flow {flow}: candidate path {path} is not a valid simple path")]
    InvalidCandidatePath { flow: usize, path: usize },
    #[error("flow {flow}: candidate paths are not strictly ordered")]
    UnorderedCandidatePaths { flow: usize },
    #[error("expected {expected} path lists, got {got}")]
    PathListCount { expected: usize, got: usize },
    #[error("candidate paths have not been attached to the instance")]
    PathsNotAttached,
    #[error("assignment covers {got} flows, instance has {expected}")]
    AssignmentIncomplete { expected: usize, got: usize },
    #[error("flow {flow}: path {path} does not exist in its candidate list")]
    UnknownPath { flow: usize, path: String },
    #[error("unknown ILP variable `{0}`")]
    UnknownVariable(String),
    #[error("missing value for ILP variable `{0}`")]
    MissingVariable(String),
    #[error("flow {flow} has more than one selected path")]
    MultiplePathsSelected { flow: usize },
    #[error("values file line {line}: {reason}")]
    ValuesSyntax { line: usize, reason: String },
    #[error("brute force would visit {combinations} assignments (limit {limit})")]
    InstanceTooLarge { combinations: f64, limit: f64 },
    #[error("topology generation needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("chromosome shapes differ ({left} vs {right} bits)")]
    ShapeMismatch { left: usize, right: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PfarError {
    pub(crate) fn edge_out_of_range(edge: Edge, node_count: usize) -> Self {
        let node = if edge.src >= node_count { edge.src } else { edge.dst };
        PfarError::NodeOutOfRange { node, node_count }
    }
}

pub type Result<T> = std::result::Result<T, PfarError>;
