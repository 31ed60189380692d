//! Dataset ingestion and preparation.
//!
//! Citation networks become hypergraphs with one hyperedge per paper (the
//! paper plus its citation neighbourhood). Set-membership datasets map
//! records directly to hyperedges and can be padded with synthetic
//! negative hyperedges.

mod citation;
mod sets;
mod split;
pub mod synthetic;

use std::path::PathBuf;

use thiserror::Error;

pub use citation::{
    ingest_citation, ingest_pubmed_linqs, neighborhood_hypergraph, parse_citation, parse_pubmed_linqs,
    CitationDataset, NeighborhoodMode,
};
pub use sets::{
    parse_set_dataset, synthesize_negatives, NegativeScheme, Relabel, SetDataset, SetRecord, NEGATIVE_CLASS,
};
pub use split::{split, LabeledSplit};

use crate::hypergraph::HypergraphError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("feature width {found} does not match declared width {declared}")]
    FeatureWidth { found: usize, declared: usize },
    #[error("cannot draw {requested} distinct vertices from a universe of {universe}")]
    UniverseTooSmall { requested: usize, universe: usize },
    #[error("dataset has no positive records")]
    NoPositives,
    #[error("could not synthesize a negative hyperedge distinct from all positives after {0} attempts")]
    NegativeExhausted(usize),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("invalid dataset option: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

pub(crate) fn open(path: &std::path::Path) -> Result<std::io::BufReader<std::fs::File>, DatasetError> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
}
