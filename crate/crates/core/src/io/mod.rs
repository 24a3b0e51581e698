//! Serialization formats, dataset ingestion, and synthetic generators.
//!
//! Wire formats: the `GraphDocument` JSON schema, whitespace edge lists,
//! big-endian IDX image/label files, MLP checkpoints, and the coloring/base
//! result documents emitted by the command-line tools.

pub mod checkpoint;
pub mod document;
pub mod generate;
pub mod idx;

use thiserror::Error;

use crate::graph::GraphError;
use crate::mlp::MlpError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {detail}")]
    Json { path: String, detail: String },
    #[error("{path}:{line}: {detail}")]
    EdgeList {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: unknown key \"{key}\" in {location} (strict mode)")]
    UnknownKey {
        path: String,
        location: &'static str,
        key: String,
    },
    #[error("{path}: {detail}")]
    Document { path: String, detail: String },
    #[error("{path}: bad IDX file: {detail}")]
    Idx { path: String, detail: String },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("checkpoint version {got} unsupported (expected {expected})")]
    CheckpointVersion { got: u32, expected: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

pub use document::{
    load_graph, parse_edge_list, save_graph, BaseDocument, ColoringDocument, EdgeDoc,
    GraphDocument, LoadedGraph, NodeDoc,
};
pub use generate::{generate, synthetic_digits, GenSpec, Generated};
pub use idx::{load_idx, IdxDataset, IMAGES_MAGIC, LABELS_MAGIC};
