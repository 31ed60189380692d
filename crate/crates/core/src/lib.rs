//! Hypergraph representation learning: random walks over a hypergraph and
//! its dual, skip-gram embeddings of vertices and hyperedges, and a
//! hyperedge classifier combining a context network with a
//! permutation-invariant membership network.

pub mod cli;
pub mod datasets;
pub mod dhe;
pub mod hypergraph;
pub mod metrics;
pub mod neural;
pub mod pipeline;
pub mod rng;
pub mod sgns;
pub mod walks;
