//! MLP training with fibration gradient descent.
//!
//! The training loop periodically measures activity synchronization between
//! hidden nodes, clusters nodes whose activities track each other, and
//! collapses each cluster into a single node with input-preserving weight
//! updates. With the synchronization threshold at zero the loop reduces
//! exactly to plain stochastic gradient descent.

mod fbgd;
mod model;
mod sync;

pub use fbgd::{
    collapse, fbgd_train, sgd_train, CollapseEvent, EpochRecord, FbgdConfig, SaturationEvent,
    TrainResult,
};
pub use model::{
    accuracy, batch_gradients, batch_loss, sgd_step, Activations, Dataset, MlpError, MlpModel,
};
pub use sync::{
    detect_clusters, detect_clusters_with, sync_matrices, sync_matrices_all_hidden,
    ClusterPartition, SyncCriterion, SyncReport, ANALYSIS_EPSILON,
};
