//! MLP forward/backward and stochastic gradient descent.
//!
//! Networks have no bias terms: layer input is the weighted sum of the
//! previous layer's activities, with the sample injected at layer 0. Hidden
//! layers use ReLU; the output layer is linear and trained with softmax
//! cross-entropy.

use rand::Rng;
use thiserror::Error;

use crate::gnn::DenseMatrix;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input has length {got}, expected {expected}")]
    InputLength { got: usize, expected: usize },
    #[error("network needs at least an input and an output layer")]
    TooFewLayers,
    #[error("weight matrix {index} is {got_rows}x{got_cols}, expected {rows} input rows")]
    WeightShape {
        index: usize,
        got_rows: usize,
        got_cols: usize,
        rows: usize,
    },
    #[error("label {label} out of range for {classes} output classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("layer {0} is not a hidden layer")]
    NotHiddenLayer(usize),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("non-finite loss on a batch of {batch_size} samples: {detail}")]
    NonFiniteLoss { batch_size: usize, detail: String },
    #[error("cluster partition does not cover layer {layer}: {detail}")]
    PartitionMismatch { layer: usize, detail: String },
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("dataset is inconsistent: {0}")]
    BadDataset(String),
}

/// A labeled classification dataset.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, MlpError> {
        if inputs.len() != labels.len() {
            return Err(MlpError::BadDataset(format!(
                "{} inputs vs {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(first) = inputs.first() {
            let d = first.len();
            if inputs.iter().any(|x| x.len() != d) {
                return Err(MlpError::BadDataset("ragged input vectors".into()));
            }
        }
        Ok(Dataset { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// Samples whose label equals `class` (for class-restricted analyses).
    pub fn class_subset(&self, class: usize) -> Vec<Vec<f64>> {
        self.inputs
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(x, _)| x.clone())
            .collect()
    }
}

/// Layered perceptron: `weights[l]` maps layer l to layer l+1 and has shape
/// `sizes[l] x sizes[l+1]`.
#[derive(Clone, Debug)]
pub struct MlpModel {
    sizes: Vec<usize>,
    weights: Vec<DenseMatrix>,
}

/// Per-layer pre-activations and activities of one forward pass.
#[derive(Clone, Debug)]
pub struct Activations {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("at least one layer")
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

impl MlpModel {
    /// Weights drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn random(sizes: &[usize], rng: &mut impl Rng) -> Result<Self, MlpError> {
        if sizes.len() < 2 {
            return Err(MlpError::TooFewLayers);
        }
        let weights = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                DenseMatrix::random(rng, w[0], w[1], -scale, scale)
            })
            .collect();
        Ok(MlpModel {
            sizes: sizes.to_vec(),
            weights,
        })
    }

    pub fn from_weights(weights: Vec<DenseMatrix>) -> Result<Self, MlpError> {
        if weights.is_empty() {
            return Err(MlpError::TooFewLayers);
        }
        let mut sizes = vec![weights[0].rows()];
        for (index, w) in weights.iter().enumerate() {
            let expected = *sizes.last().expect("nonempty");
            if w.rows() != expected {
                return Err(MlpError::WeightShape {
                    index,
                    got_rows: w.rows(),
                    got_cols: w.cols(),
                    rows: expected,
                });
            }
            sizes.push(w.cols());
        }
        Ok(MlpModel { sizes, weights })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Sizes of the hidden layers only.
    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.sizes[1..self.sizes.len() - 1].to_vec()
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.weights
    }

    pub(crate) fn replace_layer(
        &mut self,
        layer: usize,
        incoming: DenseMatrix,
        outgoing: DenseMatrix,
        new_size: usize,
    ) {
        self.weights[layer - 1] = incoming;
        self.weights[layer] = outgoing;
        self.sizes[layer] = new_size;
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    /// Full forward pass returning every layer's pre-activation and activity.
    /// The sample is injected at layer 0 (so `post[0] = relu(x)`); hidden
    /// layers apply ReLU; the output layer is linear.
    pub fn forward(&self, x: &[f64]) -> Result<Activations, MlpError> {
        if x.len() != self.sizes[0] {
            return Err(MlpError::InputLength {
                got: x.len(),
                expected: self.sizes[0],
            });
        }
        let last = self.sizes.len() - 1;
        let mut pre = Vec::with_capacity(self.sizes.len());
        let mut post = Vec::with_capacity(self.sizes.len());
        pre.push(x.to_vec());
        post.push(x.iter().map(|&v| relu(v)).collect::<Vec<f64>>());
        for (l, w) in self.weights.iter().enumerate() {
            let prev = &post[l];
            let mut input = vec![0.0; w.cols()];
            for (j, &a) in prev.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (acc, &wjk) in input.iter_mut().zip(w.row(j)) {
                    *acc += a * wjk;
                }
            }
            let act: Vec<f64> = if l + 1 == last {
                input.clone()
            } else {
                input.iter().map(|&v| relu(v)).collect()
            };
            pre.push(input);
            post.push(act);
        }
        Ok(Activations { pre, post })
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        Ok(self.forward(x)?.post.last().expect("output layer").clone())
    }

    /// Argmax class, ties broken by the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, MlpError> {
        let logits = self.logits(x)?;
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Numerically stable softmax cross-entropy; returns the loss and the
/// gradient at the logits.
fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() - (logits[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|&e| e / z).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// Mean cross-entropy over the indexed batch, forward passes only.
pub fn batch_loss(m: &MlpModel, data: &Dataset, idx: &[usize]) -> Result<f64, MlpError> {
    if idx.is_empty() {
        return Err(MlpError::EmptySampleSet);
    }
    let classes = m.output_dim();
    let mut total = 0.0;
    for &i in idx {
        let label = data.labels[i];
        if label >= classes {
            return Err(MlpError::LabelOutOfRange { label, classes });
        }
        let logits = m.logits(&data.inputs[i])?;
        total += softmax_cross_entropy(&logits, label).0;
    }
    Ok(total / idx.len() as f64)
}

/// Mean-batch gradients for every weight matrix, plus the mean loss.
/// Accumulation is sequential in batch order, so results are deterministic.
pub fn batch_gradients(
    m: &MlpModel,
    data: &Dataset,
    idx: &[usize],
) -> Result<(Vec<DenseMatrix>, f64), MlpError> {
    if idx.is_empty() {
        return Err(MlpError::EmptySampleSet);
    }
    let classes = m.output_dim();
    let mut grads: Vec<DenseMatrix> = m
        .weights()
        .iter()
        .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
        .collect();
    let mut total = 0.0;

    for &i in idx {
        let label = data.labels[i];
        if label >= classes {
            return Err(MlpError::LabelOutOfRange { label, classes });
        }
        let acts = m.forward(&data.inputs[i])?;
        let (loss, dlogits) = softmax_cross_entropy(acts.output(), label);
        total += loss;

        let mut delta = dlogits;
        for l in (0..m.weights().len()).rev() {
            // dW[l] += post[l] (outer) delta.
            let prev = &acts.post[l];
            let gw = &mut grads[l];
            for (j, &a) in prev.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &d) in gw.row_mut(j).iter_mut().zip(&delta) {
                    *o += a * d;
                }
            }
            if l == 0 {
                break;
            }
            let w = &m.weights()[l];
            let mut prev_delta = vec![0.0; w.rows()];
            for (j, pd) in prev_delta.iter_mut().enumerate() {
                if acts.pre[l][j] > 0.0 {
                    let mut acc = 0.0;
                    for (k, &d) in delta.iter().enumerate() {
                        acc += w.get(j, k) * d;
                    }
                    *pd = acc;
                }
            }
            delta = prev_delta;
        }
    }

    let scale = 1.0 / idx.len() as f64;
    for gw in &mut grads {
        for r in 0..gw.rows() {
            for v in gw.row_mut(r) {
                *v *= scale;
            }
        }
    }
    Ok((grads, total * scale))
}

/// One gradient step on the mean batch cross-entropy. Returns the pre-step
/// mean loss.
pub fn sgd_step(
    m: &mut MlpModel,
    data: &Dataset,
    idx: &[usize],
    learning_rate: f64,
) -> Result<f64, MlpError> {
    let (grads, loss) = batch_gradients(m, data, idx)?;
    if !loss.is_finite() {
        return Err(MlpError::NonFiniteLoss {
            batch_size: idx.len(),
            detail: format!("loss {loss} before update"),
        });
    }
    for (w, g) in m.weights_mut().iter_mut().zip(&grads) {
        w.add_scaled(g, -learning_rate);
    }
    Ok(loss)
}

/// Fraction of samples whose argmax output equals the label.
pub fn accuracy(m: &MlpModel, data: &Dataset) -> Result<f64, MlpError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for (x, &label) in data.inputs.iter().zip(&data.labels) {
        if m.predict(x)? == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_hidden_activity() {
        let m = MlpModel::from_weights(vec![DenseMatrix::zeros(3, 2), DenseMatrix::zeros(2, 2)])
            .unwrap();
        let acts = m.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(acts.post[1], vec![0.0, 0.0]);
        assert_eq!(acts.output(), &[0.0, 0.0]);
    }

    #[test]
    fn unit_chain_propagates_value() {
        let m = MlpModel::from_weights(vec![
            DenseMatrix::from_rows(vec![vec![1.0]]),
            DenseMatrix::from_rows(vec![vec![1.0]]),
        ])
        .unwrap();
        let acts = m.forward(&[2.0]).unwrap();
        assert_eq!(acts.post[1], vec![2.0]);
        assert_eq!(acts.output(), &[2.0]);
    }

    #[test]
    fn negative_preactivation_clamps_to_zero() {
        let m = MlpModel::from_weights(vec![
            DenseMatrix::from_rows(vec![vec![-1.0]]),
            DenseMatrix::from_rows(vec![vec![1.0]]),
        ])
        .unwrap();
        let acts = m.forward(&[3.0]).unwrap();
        assert_eq!(acts.pre[1], vec![-3.0]);
        assert_eq!(acts.post[1], vec![0.0]);
    }

    #[test]
    fn zero_learning_rate_keeps_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = MlpModel::random(&[4, 3, 2], &mut rng).unwrap();
        let before = m.clone();
        let data = Dataset::new(vec![vec![0.1, 0.2, 0.3, 0.4]], vec![1]).unwrap();
        sgd_step(&mut m, &data, &[0], 0.0).unwrap();
        for (a, b) in m.weights().iter().zip(before.weights()) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn single_weight_update_matches_closed_form() {
        // One input, two logits: dL/dw_k = (p_k - 1[k==label]) * x.
        let w = DenseMatrix::from_rows(vec![vec![0.5, -0.25]]);
        let mut m = MlpModel::from_weights(vec![w]).unwrap();
        let x = 2.0;
        let data = Dataset::new(vec![vec![x]], vec![0]).unwrap();
        let logits = m.logits(&[x]).unwrap();
        let max = logits[0].max(logits[1]);
        let z: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
        let p0 = (logits[0] - max).exp() / z;
        let p1 = (logits[1] - max).exp() / z;
        let expected = [0.5 - 0.1 * (p0 - 1.0) * x, -0.25 - 0.1 * p1 * x];
        sgd_step(&mut m, &data, &[0], 0.1).unwrap();
        assert!((m.weights()[0].get(0, 0) - expected[0]).abs() < 1e-12);
        assert!((m.weights()[0].get(0, 1) - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences_on_small_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m = MlpModel::random(&[5, 4, 3], &mut rng).unwrap();
        let inputs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let labels = vec![0, 2, 1, 2];
        let data = Dataset::new(inputs, labels).unwrap();
        let idx: Vec<usize> = (0..4).collect();
        let (grads, _) = batch_gradients(&m, &data, &idx).unwrap();

        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for l in 0..m.weights().len() {
            for r in 0..m.weights()[l].rows() {
                for c in 0..m.weights()[l].cols() {
                    let mut mp = m.clone();
                    let v = mp.weights()[l].get(r, c);
                    mp.weights_mut()[l].set(r, c, v + eps);
                    let lp = batch_loss(&mp, &data, &idx).unwrap();
                    let mut mm = m.clone();
                    mm.weights_mut()[l].set(r, c, v - eps);
                    let lm = batch_loss(&mm, &data, &idx).unwrap();
                    let fd = (lp - lm) / (2.0 * eps);
                    let an = grads[l].get(r, c);
                    worst = worst.max((fd - an).abs() / (1.0 + fd.abs().max(an.abs())));
                }
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn accuracy_counts_argmax_hits() {
        let m =
            MlpModel::from_weights(vec![DenseMatrix::from_rows(vec![vec![1.0, -1.0]])]).unwrap();
        let data = Dataset::new(vec![vec![1.0], vec![2.0], vec![0.5]], vec![0, 0, 1]).unwrap();
        let acc = accuracy(&m, &data).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_single_sample_accuracy() {
        let m = MlpModel::from_weights(vec![DenseMatrix::from_rows(vec![vec![1.0, 0.0]])]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![0]).unwrap();
        assert_eq!(accuracy(&m, &data).unwrap(), 1.0);
    }

    #[test]
    fn label_out_of_range_is_reported() {
        let m = MlpModel::from_weights(vec![DenseMatrix::zeros(1, 2)]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![5]).unwrap();
        assert!(matches!(
            batch_loss(&m, &data, &[0]),
            Err(MlpError::LabelOutOfRange { label: 5, .. })
        ));
    }
}
