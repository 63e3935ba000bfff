//! Datasets: synthetic generation, CSV ingestion and random sampling masks.

mod csvio;
mod sampling;
mod synthetic;

pub use csvio::{
    load_dataset_csv, load_manifest, read_nodes_csv, read_signals_csv, write_matrix_csv, write_nodes_csv, DatasetManifest,
};
pub use sampling::random_sampling_mask;
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::temporal::TimeSignal;

/// A graph with a ground-truth time-varying signal on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub signal: TimeSignal,
    pub knn_k: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graph: Graph, signal: TimeSignal, knn_k: usize) -> Result<Self> {
        if signal.n_nodes() != graph.n() {
            return Err(Error::shape("Dataset signal rows", graph.n(), signal.n_nodes()));
        }
        Ok(Self {
            name: name.into(),
            graph,
            signal,
            knn_k,
        })
    }
}
