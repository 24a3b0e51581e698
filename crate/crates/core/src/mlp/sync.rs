//! Activity synchronization between hidden nodes.
//!
//! For a hidden layer and a sample set S, the pairwise distance matrices are
//!   d_ii'(x)   = h_i(x) - h_i'(x)
//!   xi_ii'     = |mean over S of d|
//!   Lambda_ii' = mean over S of |d|
//! Nodes whose Lambda (or xi) falls below a threshold are clustered by
//! single-linkage closure.

use crate::gnn::DenseMatrix;

use super::model::{Dataset, MlpError, MlpModel};

/// Default distance tolerance for synchronization analysis (cluster maps,
/// per-class reports). Training uses the tighter `FbgdConfig` default.
pub const ANALYSIS_EPSILON: f64 = 0.1;

/// Pairwise synchronization matrices of one hidden layer over a sample set.
#[derive(Clone, Debug)]
pub struct SyncReport {
    pub layer: usize,
    /// Mean absolute activity distance; symmetric, zero diagonal.
    pub lambda: DenseMatrix,
    /// Absolute mean signed distance; entrywise at most `lambda`.
    pub xi: DenseMatrix,
    /// Mean activity of each node over the sample set.
    pub mean_activity: Vec<f64>,
    /// Node indices sorted by ascending mean activity (reporting convention).
    pub activity_order: Vec<usize>,
    pub sample_count: usize,
}

impl SyncReport {
    /// Fraction of nodes with exactly zero activity on every sample.
    pub fn dead_fraction(&self) -> f64 {
        if self.mean_activity.is_empty() {
            return 0.0;
        }
        let dead = self.mean_activity.iter().filter(|&&m| m == 0.0).count();
        dead as f64 / self.mean_activity.len() as f64
    }
}

/// Computes the synchronization matrices of hidden layer `layer` over the
/// given samples. `layer` indexes the network layers (0 = input), so hidden
/// layers are `1..=layer_count-2`.
pub fn sync_matrices(
    m: &MlpModel,
    samples: &[Vec<f64>],
    layer: usize,
) -> Result<SyncReport, MlpError> {
    if layer == 0 || layer + 1 >= m.layer_count() {
        return Err(MlpError::NotHiddenLayer(layer));
    }
    if samples.is_empty() {
        return Err(MlpError::EmptySampleSet);
    }
    let width = m.layer_sizes()[layer];

    // Column-major activities: per node, its activity across the samples.
    let mut acts: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); width];
    for x in samples {
        let a = m.forward(x)?;
        for (node, &v) in a.post[layer].iter().enumerate() {
            acts[node].push(v);
        }
    }

    let inv_n = 1.0 / samples.len() as f64;
    let mut lambda = DenseMatrix::zeros(width, width);
    let mut xi = DenseMatrix::zeros(width, width);
    for i in 0..width {
        for j in (i + 1)..width {
            let mut abs_sum = 0.0;
            let mut sum = 0.0;
            for (&a, &b) in acts[i].iter().zip(&acts[j]) {
                let d = a - b;
                abs_sum += d.abs();
                sum += d;
            }
            let l = abs_sum * inv_n;
            let x = (sum * inv_n).abs();
            lambda.set(i, j, l);
            lambda.set(j, i, l);
            xi.set(i, j, x);
            xi.set(j, i, x);
        }
    }

    let mean_activity: Vec<f64> = acts
        .iter()
        .map(|column| column.iter().sum::<f64>() * inv_n)
        .collect();
    let mut activity_order: Vec<usize> = (0..width).collect();
    activity_order.sort_by(|&a, &b| {
        mean_activity[a]
            .partial_cmp(&mean_activity[b])
            .expect("finite activities")
            .then(a.cmp(&b))
    });

    Ok(SyncReport {
        layer,
        lambda,
        xi,
        mean_activity,
        activity_order,
        sample_count: samples.len(),
    })
}

/// Which matrix drives clustering. The mean-absolute distance is the stricter
/// and numerically stabler criterion and is the default; the signed-mean
/// variant is available behind the flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SyncCriterion {
    #[default]
    Lambda,
    Xi,
}

/// Partition of one hidden layer into clusters of synchronized nodes.
#[derive(Clone, Debug)]
pub struct ClusterPartition {
    pub layer: usize,
    /// Per-node cluster id, dense in `[0, cluster_count)`, numbered by each
    /// cluster's smallest member.
    pub assignment: Vec<usize>,
    pub cluster_count: usize,
    pub sizes: Vec<usize>,
    /// Mean activity of each cluster (mean of member means).
    pub mean_activity: Vec<f64>,
}

impl ClusterPartition {
    pub fn is_trivial(&self) -> bool {
        self.cluster_count == self.assignment.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.cluster_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            members[c].push(node);
        }
        members
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Single-linkage closure over all pairs with distance strictly below
/// `epsilon`, processed in ascending (i, j) order. Uses the Lambda matrix.
pub fn detect_clusters(report: &SyncReport, epsilon: f64) -> ClusterPartition {
    detect_clusters_with(report, epsilon, SyncCriterion::Lambda)
}

/// [`detect_clusters`] with an explicit criterion matrix.
pub fn detect_clusters_with(
    report: &SyncReport,
    epsilon: f64,
    criterion: SyncCriterion,
) -> ClusterPartition {
    assert!(epsilon >= 0.0, "epsilon must be non-negative");
    let matrix = match criterion {
        SyncCriterion::Lambda => &report.lambda,
        SyncCriterion::Xi => &report.xi,
    };
    let n = matrix.rows();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix.get(i, j) < epsilon {
                uf.union(i, j);
            }
        }
    }

    // Number clusters by their smallest member.
    let mut cluster_of_root: Vec<Option<usize>> = vec![None; n];
    let mut assignment = vec![0usize; n];
    let mut count = 0usize;
    for (node, slot) in assignment.iter_mut().enumerate() {
        let root = uf.find(node);
        *slot = *cluster_of_root[root].get_or_insert_with(|| {
            let id = count;
            count += 1;
            id
        });
    }

    let mut sizes = vec![0usize; count];
    let mut mean_activity = vec![0.0; count];
    for (node, &c) in assignment.iter().enumerate() {
        sizes[c] += 1;
        mean_activity[c] += report.mean_activity[node];
    }
    for (m, &s) in mean_activity.iter_mut().zip(&sizes) {
        *m /= s as f64;
    }

    ClusterPartition {
        layer: report.layer,
        assignment,
        cluster_count: count,
        sizes,
        mean_activity,
    }
}

/// Synchronization reports for every hidden layer from a single sweep over
/// the samples.
pub fn sync_matrices_all_hidden(
    m: &MlpModel,
    data: &Dataset,
) -> Result<Vec<SyncReport>, MlpError> {
    (1..m.layer_count() - 1)
        .map(|layer| sync_matrices(m, &data.inputs, layer))
        .collect()
}
