//! Knowledge-graph storage: vocabularies, augmented triples, head-indexed
//! adjacency, progressive frontiers, hop distances, and dataset splits.

mod graph;
mod loader;
pub mod synthetic;

pub use graph::{
    expand_frontier, filter_mask, hop_distances, EntityId, Frontier, KnowledgeGraph, RelationId,
    Triple, Vocabulary,
};
pub use loader::{
    load_dataset_dir, load_inductive_dataset, load_triples, write_triples, DatasetSplit, Query,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("{path}:{line}: malformed triple line (expected head<TAB>relation<TAB>tail)")]
    MalformedLine { path: String, line: usize },
    #[error("{path}:{line}: unknown {kind} '{name}' with frozen vocabulary")]
    UnknownName {
        path: String,
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("duplicate {kind} name '{name}' in vocabulary")]
    DuplicateName { kind: &'static str, name: String },
    #[error("relation index {index} out of base range {base}")]
    RelationOutOfRange { index: usize, base: usize },
    #[error("entity index {index} out of range {count}")]
    EntityOutOfRange { index: usize, count: usize },
    #[error("missing dataset file {0}")]
    MissingFile(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
