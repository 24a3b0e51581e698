//! Fibration gradient descent: train, detect synchronized hidden nodes,
//! collapse them, repeat.
//!
//! Collapse rule: the merged node's incoming weights are the member-wise
//! mean, its outgoing weights the member-wise sum. When members are exactly
//! synchronized every downstream input is unchanged, so the network function
//! is preserved; with the threshold at zero no clusters form and the loop is
//! bitwise identical to plain SGD under the same seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gnn::DenseMatrix;

use super::model::{accuracy, sgd_step, Dataset, MlpError, MlpModel};
use super::sync::{detect_clusters_with, sync_matrices, ClusterPartition, SyncCriterion};

#[derive(Clone, Debug)]
pub struct FbgdConfig {
    /// Synchronization threshold (strictly-below comparisons).
    pub epsilon: f64,
    /// Epochs between collapse events.
    pub period: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub criterion: SyncCriterion,
}

impl Default for FbgdConfig {
    fn default() -> Self {
        FbgdConfig {
            epsilon: 5e-2,
            period: 5,
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
            criterion: SyncCriterion::Lambda,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Accuracy on the evaluation set (the training set when none is given).
    pub accuracy: f64,
    pub hidden_sizes: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CollapseEvent {
    pub epoch: usize,
    pub layer: usize,
    pub before: usize,
    pub after: usize,
}

/// Emitted when a collapse would shrink the final hidden layer below the
/// output dimension; that layer is left untouched for the event.
#[derive(Clone, Debug)]
pub struct SaturationEvent {
    pub epoch: usize,
    pub layer: usize,
    pub proposed: usize,
    pub minimum: usize,
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub model: MlpModel,
    pub trajectory: Vec<EpochRecord>,
    pub collapses: Vec<CollapseEvent>,
    pub saturations: Vec<SaturationEvent>,
}

/// Merges each cluster of hidden layer `layer` into a single node: incoming
/// weights averaged, outgoing weights summed, clusters ordered by smallest
/// member.
pub fn collapse(
    m: &MlpModel,
    layer: usize,
    p: &ClusterPartition,
) -> Result<MlpModel, MlpError> {
    if layer == 0 || layer + 1 >= m.layer_count() {
        return Err(MlpError::NotHiddenLayer(layer));
    }
    let width = m.layer_sizes()[layer];
    if p.assignment.len() != width {
        return Err(MlpError::PartitionMismatch {
            layer,
            detail: format!("{} assignments for width {}", p.assignment.len(), width),
        });
    }
    if p.layer != layer {
        return Err(MlpError::PartitionMismatch {
            layer,
            detail: format!("partition was computed for layer {}", p.layer),
        });
    }
    for &c in &p.assignment {
        if c >= p.cluster_count {
            return Err(MlpError::PartitionMismatch {
                layer,
                detail: format!("cluster id {c} out of range"),
            });
        }
    }

    let members = p.members();
    let w_in = &m.weights()[layer - 1];
    let w_out = &m.weights()[layer];

    let mut new_in = DenseMatrix::zeros(w_in.rows(), p.cluster_count);
    for (c, cluster) in members.iter().enumerate() {
        let scale = 1.0 / cluster.len() as f64;
        for r in 0..w_in.rows() {
            let mut sum = 0.0;
            for &node in cluster {
                sum += w_in.get(r, node);
            }
            new_in.set(r, c, sum * scale);
        }
    }

    let mut new_out = DenseMatrix::zeros(p.cluster_count, w_out.cols());
    for (c, cluster) in members.iter().enumerate() {
        for &node in cluster {
            for k in 0..w_out.cols() {
                let v = new_out.get(c, k) + w_out.get(node, k);
                new_out.set(c, k, v);
            }
        }
    }

    let mut out = m.clone();
    out.replace_layer(layer, new_in, new_out, p.cluster_count);
    Ok(out)
}

fn validate_config(cfg: &FbgdConfig) -> Result<(), MlpError> {
    if cfg.epsilon < 0.0 {
        return Err(MlpError::BadConfig("epsilon must be >= 0".into()));
    }
    if cfg.period == 0 {
        return Err(MlpError::BadConfig("period must be >= 1".into()));
    }
    if cfg.batch_size == 0 {
        return Err(MlpError::BadConfig("batch size must be >= 1".into()));
    }
    Ok(())
}

fn train_loop(
    mut model: MlpModel,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &FbgdConfig,
    collapse_enabled: bool,
) -> Result<TrainResult, MlpError> {
    validate_config(cfg)?;
    if train.is_empty() {
        return Err(MlpError::EmptySampleSet);
    }
    if train.input_dim() != model.layer_sizes()[0] {
        return Err(MlpError::InputLength {
            got: train.input_dim(),
            expected: model.layer_sizes()[0],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trajectory = Vec::with_capacity(cfg.epochs);
    let mut collapses = Vec::new();
    let mut saturations = Vec::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let loss = sgd_step(&mut model, train, batch, cfg.learning_rate)?;
            loss_sum += loss * batch.len() as f64;
        }
        let epoch_loss = loss_sum / train.len() as f64;

        if collapse_enabled && epoch % cfg.period == 0 {
            // One partition per hidden layer from the pre-collapse model,
            // applied shallowest first.
            let hidden: Vec<usize> = (1..model.layer_count() - 1).collect();
            let mut partitions = Vec::with_capacity(hidden.len());
            for &layer in &hidden {
                let report = sync_matrices(&model, &train.inputs, layer)?;
                partitions.push(detect_clusters_with(&report, cfg.epsilon, cfg.criterion));
            }
            let last_hidden = *hidden.last().expect("at least one hidden layer");
            for (layer, p) in hidden.into_iter().zip(partitions) {
                if p.is_trivial() {
                    continue;
                }
                if layer == last_hidden && p.cluster_count < model.output_dim() {
                    saturations.push(SaturationEvent {
                        epoch,
                        layer,
                        proposed: p.cluster_count,
                        minimum: model.output_dim(),
                    });
                    continue;
                }
                let before = model.layer_sizes()[layer];
                model = collapse(&model, layer, &p)?;
                collapses.push(CollapseEvent {
                    epoch,
                    layer,
                    before,
                    after: p.cluster_count,
                });
            }
        }

        let acc = accuracy(&model, eval.unwrap_or(train))?;
        trajectory.push(EpochRecord {
            epoch,
            loss: epoch_loss,
            accuracy: acc,
            hidden_sizes: model.hidden_sizes(),
        });
    }

    Ok(TrainResult {
        model,
        trajectory,
        collapses,
        saturations,
    })
}

/// Fibration gradient descent: every `period` epochs, clusters of
/// activity-synchronized hidden nodes (measured over the full training set)
/// are collapsed. Layer sizes are non-increasing over the run.
pub fn fbgd_train(
    model: MlpModel,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &FbgdConfig,
) -> Result<TrainResult, MlpError> {
    train_loop(model, train, eval, cfg, true)
}

/// Plain SGD baseline with the identical batch schedule; `epsilon` and
/// `period` are ignored.
pub fn sgd_train(
    model: MlpModel,
    train: &Dataset,
    eval: Option<&Dataset>,
    cfg: &FbgdConfig,
) -> Result<TrainResult, MlpError> {
    train_loop(model, train, eval, cfg, false)
}
