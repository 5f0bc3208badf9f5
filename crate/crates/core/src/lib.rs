//! Topology-guided hypergraph transformer.
//!
//! The crate turns an ordinary weighted graph into a hypergraph whose
//! hyperedges are overlapping communities, computes the structural and
//! spatial signals attached to nodes and hyperedges, and trains a two-level
//! (node-to-hyperedge, hyperedge-to-node) attention network whose logits are
//! biased by those signals.
//!
//! Everything here is pure computation on in-memory data and builds without
//! `std`; file formats, configuration files and the command line live in the
//! companion `thtn` crate.
//!
//! Pipeline, bottom up:
//!
//! * [`graph`]: weighted undirected simple graphs and induced subgraphs.
//! * [`community`]: overlapping community detection behind a pluggable
//!   [`community::CommunityDetector`] trait.
//! * [`hypergraph`]: one hyperedge per community plus closeness-central
//!   global nodes.
//! * [`measures`]: closeness, uniqueness, clustering, coreness, hyperedge
//!   density and clustering, assembled into [`measures::StructuralBias`].
//! * [`spectral`]: clique-expansion Laplacian and its low eigenvectors.
//! * [`tensor`]: a small reverse-mode autodiff engine with Adam.
//! * [`model`] and [`train`]: the network itself and its training loop.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod community;
pub mod error;
pub mod graph;
pub mod hypergraph;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod rng;
pub mod spectral;
pub mod split;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use graph::Graph;
pub use hypergraph::Hypergraph;
