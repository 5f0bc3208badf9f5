use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("duplicate undirected edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("invalid edge weight {weight} on ({u}, {v})")]
    InvalidWeight { u: usize, v: usize, weight: f64 },
    #[error("node id {id} out of range for {num_nodes} nodes")]
    NodeOutOfRange { id: usize, num_nodes: usize },
    #[error("split ratios sum to {0}, expected 1")]
    RatioSum(f64),
    #[error("unknown community detection algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("empty node set")]
    EmptyNodeSet,
    #[error("community cover has no communities")]
    EmptyCover,
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty mask")]
    EmptyMask,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
