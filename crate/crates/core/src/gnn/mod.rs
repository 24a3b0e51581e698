//! Message-passing layers on graphs and on their fibration bases.
//!
//! Four layer operations are supported: graph convolution (GC), edge-
//! conditioned convolution (GEC), graph isomorphism (GI), and graph attention
//! (GA). Every operation reads only the in-neighborhood of each node, so
//! fiber-constant inputs stay fiber-constant ("node synchronization"), and
//! the same formulas evaluated on the base multigraph — whose parallel edges
//! carry the bundle multiplicities — reproduce the original outputs after
//! lifting. [`reduction_deviation`] certifies that equivalence numerically.
//!
//! A single forward pass is sequential and deterministic: aggregation always
//! sums over in-neighbors in ascending node order.

pub mod grad;
pub mod matrix;

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::fibration::{BaseGraph, Coloring};
use crate::graph::{DirectedMultigraph, EdgeTypeId};
pub use matrix::DenseMatrix;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("feature matrix has {got} rows, graph has {want} nodes")]
    RowMismatch { got: usize, want: usize },
    #[error("shape mismatch in {context}: got {got}, expected {expected}")]
    ShapeMismatch {
        context: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("layer is {got}, operation requires {want}")]
    WrongKind {
        got: &'static str,
        want: &'static str,
    },
    #[error("no edge-weight matrix for edge type {0}")]
    MissingEdgeType(EdgeTypeId),
    #[error("epsilon {0} outside [-1, 1]")]
    EpsilonOutOfRange(f64),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("attention mask requires positive weights; edge {src}->{dst} has weight {weight}")]
    NonPositiveAttentionWeight {
        src: usize,
        dst: usize,
        weight: f64,
    },
    #[error("input rows differ within fiber {fiber} (nodes {a} and {b})")]
    NotFiberConstant { fiber: usize, a: usize, b: usize },
    #[error("fiber count mismatch: matrix has {got} rows, base has {want} fibers")]
    FiberRowMismatch { got: usize, want: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x` (ReLU uses the 0 subgradient at 0).
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

/// The GI update map: `x -> act(x W1) W2`.
#[derive(Clone, Debug)]
pub struct TwoLayerMap {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
    pub activation: Activation,
}

impl TwoLayerMap {
    pub fn identity(dim: usize) -> Self {
        TwoLayerMap {
            w1: DenseMatrix::identity(dim),
            w2: DenseMatrix::identity(dim),
            activation: Activation::Identity,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        let a = self.activation;
        x.matmul(&self.w1).map(|v| a.apply(v)).matmul(&self.w2)
    }
}

/// One message-passing layer.
#[derive(Clone, Debug)]
pub enum GnnLayer {
    /// Symmetrically normalized convolution over the (weighted) adjacency
    /// with an added identity: `F(D^-1/2 A^T D^-1/2 H W)`. With `binarize`
    /// every edge counts 1 instead of its weight.
    Gc {
        weight: DenseMatrix,
        activation: Activation,
        binarize: bool,
    },
    /// Edge-conditioned convolution: row i is
    /// `F(h_i Theta + sum_j A_ji h_j W(type_ji))`, parallel edges counted.
    Gec {
        theta: DenseMatrix,
        edge_weights: BTreeMap<EdgeTypeId, DenseMatrix>,
        activation: Activation,
    },
    /// Sum aggregation with a weighted self term:
    /// `F_inner(((1 + eps) I + (A + I)^T) H)`.
    Gi { epsilon: f64, inner: TwoLayerMap },
    /// Attention over in-neighbors: scores `rho(HW b1 1 + (HW b2 1)^T)` plus
    /// the log-adjacency mask, row softmax, then `F(alpha H W)`.
    Ga {
        weight: DenseMatrix,
        b1: Vec<f64>,
        b2: Vec<f64>,
        rho: Activation,
        activation: Activation,
    },
}

impl GnnLayer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GnnLayer::Gc { .. } => "GC",
            GnnLayer::Gec { .. } => "GEC",
            GnnLayer::Gi { .. } => "GI",
            GnnLayer::Ga { .. } => "GA",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            GnnLayer::Gc { weight, .. } | GnnLayer::Ga { weight, .. } => weight.rows(),
            GnnLayer::Gec { theta, .. } => theta.rows(),
            GnnLayer::Gi { inner, .. } => inner.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            GnnLayer::Gc { weight, .. } | GnnLayer::Ga { weight, .. } => weight.cols(),
            GnnLayer::Gec { theta, .. } => theta.cols(),
            GnnLayer::Gi { inner, .. } => inner.output_dim(),
        }
    }

    pub fn forward(
        &self,
        g: &DirectedMultigraph,
        h: &DenseMatrix,
    ) -> Result<LayerOutput, GnnError> {
        match self {
            GnnLayer::Gc { .. } => gc_forward(g, h, self),
            GnnLayer::Gec { .. } => gec_forward(g, h, self),
            GnnLayer::Gi { .. } => gi_forward(g, h, self),
            GnnLayer::Ga { .. } => ga_forward(g, h, self),
        }
    }
}

/// Output of one layer; `degenerate_rows` lists nodes whose attention row was
/// fully masked (no in-edges and no self-loop) and therefore zeroed.
#[derive(Clone, Debug)]
pub struct LayerOutput {
    pub output: DenseMatrix,
    pub degenerate_rows: Vec<usize>,
}

fn check_input(g: &DirectedMultigraph, h: &DenseMatrix, dim: usize) -> Result<(), GnnError> {
    if h.rows() != g.node_count() {
        return Err(GnnError::RowMismatch {
            got: h.rows(),
            want: g.node_count(),
        });
    }
    if h.cols() != dim {
        return Err(GnnError::ShapeMismatch {
            context: "feature columns vs layer input dimension",
            got: h.cols(),
            expected: dim,
        });
    }
    if !h.is_finite() {
        return Err(GnnError::NonFinite("input features"));
    }
    Ok(())
}

/// In-weight of each node under `A_hat = A + I`: 1 plus the (possibly
/// binarized) total weight of its in-edges.
fn hat_in_weights(g: &DirectedMultigraph, binarize: bool) -> Vec<f64> {
    g.nodes()
        .map(|u| {
            let s: f64 = g
                .in_edges(u)
                .expect("valid node")
                .iter()
                .map(|&(_, _, w)| if binarize { 1.0 } else { w })
                .sum();
            1.0 + s
        })
        .collect()
}

pub fn gc_forward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
) -> Result<LayerOutput, GnnError> {
    let GnnLayer::Gc {
        weight,
        activation,
        binarize,
    } = layer
    else {
        return Err(GnnError::WrongKind {
            got: layer.kind_name(),
            want: "GC",
        });
    };
    check_input(g, h, weight.rows())?;

    let agg = gc_aggregate(g, h, *binarize);
    let act = *activation;
    let out = agg.matmul(weight).map(|v| act.apply(v));
    Ok(LayerOutput {
        output: out,
        degenerate_rows: Vec::new(),
    })
}

/// `D^-1/2 (A + I)^T D^-1/2 H` with D the diagonal of column sums of A + I.
pub(crate) fn gc_aggregate(g: &DirectedMultigraph, h: &DenseMatrix, binarize: bool) -> DenseMatrix {
    let d = hat_in_weights(g, binarize);
    let mut agg = DenseMatrix::zeros(h.rows(), h.cols());
    for u in g.nodes() {
        let i = u.0;
        let self_coeff = 1.0 / d[i];
        let row = agg.row_mut(i);
        for (o, &x) in row.iter_mut().zip(h.row(i)) {
            *o = self_coeff * x;
        }
        for &(src, _, w) in g.in_edges(u).expect("valid node") {
            let weff = if binarize { 1.0 } else { w };
            let coeff = weff / (d[i].sqrt() * d[src.0].sqrt());
            let row = agg.row_mut(i);
            for (o, &x) in row.iter_mut().zip(h.row(src.0)) {
                *o += coeff * x;
            }
        }
    }
    agg
}

/// The transpose aggregate `D^-1/2 (A + I) D^-1/2 X`, used by backprop.
pub(crate) fn gc_aggregate_transpose(
    g: &DirectedMultigraph,
    x: &DenseMatrix,
    binarize: bool,
) -> DenseMatrix {
    let d = hat_in_weights(g, binarize);
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for u in g.nodes() {
        let i = u.0;
        let self_coeff = 1.0 / d[i];
        let row = out.row_mut(i);
        for (o, &v) in row.iter_mut().zip(x.row(i)) {
            *o = self_coeff * v;
        }
        // Entry (i, j) of the non-transposed operator scatters x_j into row i.
        for &(dst, _, w) in g.out_edges(u).expect("valid node") {
            let weff = if binarize { 1.0 } else { w };
            let coeff = weff / (d[i].sqrt() * d[dst.0].sqrt());
            let row = out.row_mut(i);
            for (o, &v) in row.iter_mut().zip(x.row(dst.0)) {
                *o += coeff * v;
            }
        }
    }
    out
}

pub fn gec_forward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
) -> Result<LayerOutput, GnnError> {
    let GnnLayer::Gec {
        theta,
        edge_weights,
        activation,
    } = layer
    else {
        return Err(GnnError::WrongKind {
            got: layer.kind_name(),
            want: "GEC",
        });
    };
    check_input(g, h, theta.rows())?;
    for e in g.edges() {
        if !edge_weights.contains_key(&e.ty) {
            return Err(GnnError::MissingEdgeType(e.ty));
        }
    }
    for w in edge_weights.values() {
        if w.rows() != theta.rows() || w.cols() != theta.cols() {
            return Err(GnnError::ShapeMismatch {
                context: "edge-weight matrix vs theta",
                got: w.rows() * w.cols(),
                expected: theta.rows() * theta.cols(),
            });
        }
    }

    // Precompute H W(t) per type; each edge then adds one scaled row.
    let hw: BTreeMap<EdgeTypeId, DenseMatrix> = edge_weights
        .iter()
        .map(|(&ty, w)| (ty, h.matmul(w)))
        .collect();

    let mut pre = h.matmul(theta);
    for u in g.nodes() {
        for &(src, ty, w) in g.in_edges(u).expect("valid node") {
            let contrib = &hw[&ty];
            let row = pre.row_mut(u.0);
            for (o, &x) in row.iter_mut().zip(contrib.row(src.0)) {
                *o += w * x;
            }
        }
    }
    let act = *activation;
    Ok(LayerOutput {
        output: pre.map(|v| act.apply(v)),
        degenerate_rows: Vec::new(),
    })
}

pub fn gi_forward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
) -> Result<LayerOutput, GnnError> {
    let GnnLayer::Gi { epsilon, inner } = layer else {
        return Err(GnnError::WrongKind {
            got: layer.kind_name(),
            want: "GI",
        });
    };
    if !(-1.0..=1.0).contains(epsilon) {
        return Err(GnnError::EpsilonOutOfRange(*epsilon));
    }
    check_input(g, h, inner.input_dim())?;

    // ((1 + eps) I + (A + I)^T) H: the self row appears with weight 2 + eps.
    let mut agg = DenseMatrix::zeros(h.rows(), h.cols());
    for u in g.nodes() {
        let i = u.0;
        let self_coeff = 2.0 + epsilon;
        let row = agg.row_mut(i);
        for (o, &x) in row.iter_mut().zip(h.row(i)) {
            *o = self_coeff * x;
        }
        for &(src, _, w) in g.in_edges(u).expect("valid node") {
            let row = agg.row_mut(i);
            for (o, &x) in row.iter_mut().zip(h.row(src.0)) {
                *o += w * x;
            }
        }
    }
    Ok(LayerOutput {
        output: inner.forward(&agg),
        degenerate_rows: Vec::new(),
    })
}

pub fn ga_forward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
) -> Result<LayerOutput, GnnError> {
    let GnnLayer::Ga {
        weight,
        b1,
        b2,
        rho,
        activation,
    } = layer
    else {
        return Err(GnnError::WrongKind {
            got: layer.kind_name(),
            want: "GA",
        });
    };
    check_input(g, h, weight.rows())?;
    let dim = weight.cols();
    for b in [b1, b2] {
        if b.len() != dim {
            return Err(GnnError::ShapeMismatch {
                context: "attention vector vs projected dimension",
                got: b.len(),
                expected: dim,
            });
        }
    }

    let hw = h.matmul(weight);
    let dot = |row: &[f64], b: &[f64]| -> f64 { row.iter().zip(b).map(|(x, y)| x * y).sum() };
    let s1: Vec<f64> = (0..hw.rows()).map(|i| dot(hw.row(i), b1)).collect();
    let s2: Vec<f64> = (0..hw.rows()).map(|i| dot(hw.row(i), b2)).collect();

    // Multiplicity-summed in-weights per neighbor; the mask is their log.
    let mut out = DenseMatrix::zeros(h.rows(), dim);
    let mut degenerate = Vec::new();
    for u in g.nodes() {
        let i = u.0;
        let mut in_weight: BTreeMap<usize, f64> = BTreeMap::new();
        for &(src, _, w) in g.in_edges(u).expect("valid node") {
            if w <= 0.0 {
                return Err(GnnError::NonPositiveAttentionWeight {
                    src: src.0,
                    dst: i,
                    weight: w,
                });
            }
            *in_weight.entry(src.0).or_insert(0.0) += w;
        }
        if in_weight.is_empty() {
            degenerate.push(i);
            continue;
        }
        let scores: Vec<(usize, f64)> = in_weight
            .iter()
            .map(|(&j, &a)| (j, rho.apply(s1[i] + s2[j]) + a.ln()))
            .collect();
        let max = scores.iter().fold(f64::NEG_INFINITY, |m, &(_, e)| m.max(e));
        let mut z = 0.0;
        let exps: Vec<(usize, f64)> = scores
            .iter()
            .map(|&(j, e)| {
                let v = (e - max).exp();
                z += v;
                (j, v)
            })
            .collect();
        for (j, v) in exps {
            let alpha = v / z;
            let row = out.row_mut(i);
            for (o, &x) in row.iter_mut().zip(hw.row(j)) {
                *o += alpha * x;
            }
        }
    }
    let act = *activation;
    Ok(LayerOutput {
        output: out.map(|v| act.apply(v)),
        degenerate_rows: degenerate,
    })
}

/// Runs a layer on the base multigraph. The base's parallel edges carry the
/// bundle multiplicities, so the ordinary forward pass on it is the reduced
/// form.
pub fn base_forward(
    b: &BaseGraph,
    h_base: &DenseMatrix,
    layer: &GnnLayer,
) -> Result<LayerOutput, GnnError> {
    if h_base.rows() != b.fiber_count() {
        return Err(GnnError::FiberRowMismatch {
            got: h_base.rows(),
            want: b.fiber_count(),
        });
    }
    layer.forward(b.base(), h_base)
}

/// Copies each fiber's row back to all of its members.
pub fn lift(b: &BaseGraph, h_base: &DenseMatrix) -> DenseMatrix {
    assert_eq!(h_base.rows(), b.fiber_count(), "one row per fiber required");
    let mut out = DenseMatrix::zeros(b.original_node_count(), h_base.cols());
    for (node, &fiber) in b.fiber_map().iter().enumerate() {
        out.row_mut(node).copy_from_slice(h_base.row(fiber));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    Sum,
    Mean,
}

/// Column-wise sum or mean over node rows.
pub fn readout(h: &DenseMatrix, mode: Readout) -> Vec<f64> {
    let mut acc = vec![0.0; h.cols()];
    for r in 0..h.rows() {
        for (a, &v) in acc.iter_mut().zip(h.row(r)) {
            *a += v;
        }
    }
    if mode == Readout::Mean && h.rows() > 0 {
        let n = h.rows() as f64;
        for a in &mut acc {
            *a /= n;
        }
    }
    acc
}

/// Readout of the lifted matrix computed directly on the base: each fiber row
/// weighted by its size.
pub fn base_readout(b: &BaseGraph, h_base: &DenseMatrix, mode: Readout) -> Vec<f64> {
    assert_eq!(h_base.rows(), b.fiber_count(), "one row per fiber required");
    let mut acc = vec![0.0; h_base.cols()];
    for (fiber, members) in b.fiber_members().iter().enumerate() {
        let m = members.len() as f64;
        for (a, &v) in acc.iter_mut().zip(h_base.row(fiber)) {
            *a += m * v;
        }
    }
    if mode == Readout::Mean && b.original_node_count() > 0 {
        let n = b.original_node_count() as f64;
        for a in &mut acc {
            *a /= n;
        }
    }
    acc
}

/// An ordered sequence of layers with a graph-level readout.
#[derive(Clone, Debug)]
pub struct LayerStack {
    pub layers: Vec<GnnLayer>,
    pub readout: Readout,
}

/// Per-layer outputs of a stack run.
#[derive(Clone, Debug)]
pub struct StackRun {
    pub outputs: Vec<DenseMatrix>,
    pub degenerate_rows: Vec<Vec<usize>>,
}

impl StackRun {
    pub fn last(&self) -> &DenseMatrix {
        self.outputs.last().expect("stack has at least one layer")
    }
}

impl LayerStack {
    pub fn forward(&self, g: &DirectedMultigraph, h0: &DenseMatrix) -> Result<StackRun, GnnError> {
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut degenerate = Vec::with_capacity(self.layers.len());
        let mut current = h0.clone();
        for layer in &self.layers {
            let out = layer.forward(g, &current)?;
            current = out.output.clone();
            outputs.push(out.output);
            degenerate.push(out.degenerate_rows);
        }
        Ok(StackRun {
            outputs,
            degenerate_rows: degenerate,
        })
    }

    pub fn forward_on_base(
        &self,
        b: &BaseGraph,
        h_base: &DenseMatrix,
    ) -> Result<StackRun, GnnError> {
        if h_base.rows() != b.fiber_count() {
            return Err(GnnError::FiberRowMismatch {
                got: h_base.rows(),
                want: b.fiber_count(),
            });
        }
        self.forward(b.base(), h_base)
    }
}

/// Tolerance for synchronization spread, scaled by the layer magnitude.
pub const SYNC_SPREAD_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SyncViolation {
    pub layer: usize,
    pub fiber: usize,
    pub spread: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct SyncCheckReport {
    /// Maximum within-fiber row spread per layer.
    pub layer_spreads: Vec<f64>,
    pub violations: Vec<SyncViolation>,
    pub passed: bool,
}

/// Runs `stack` on `g` from a fiber-constant input and verifies that rows
/// stay equal within every fiber at every layer, up to
/// `SYNC_SPREAD_TOL * (1 + max|H|)`. Non-fiber-constant inputs are rejected.
pub fn check_synchronization(
    g: &DirectedMultigraph,
    stack: &LayerStack,
    h0: &DenseMatrix,
    fibers: &Coloring,
) -> Result<SyncCheckReport, GnnError> {
    if fibers.node_count() != g.node_count() {
        return Err(GnnError::RowMismatch {
            got: fibers.node_count(),
            want: g.node_count(),
        });
    }
    if h0.rows() != g.node_count() {
        return Err(GnnError::RowMismatch {
            got: h0.rows(),
            want: g.node_count(),
        });
    }
    let classes = fibers.classes();
    for (fiber, members) in classes.iter().enumerate() {
        let first = members[0];
        for &m in &members[1..] {
            if h0.row(first.0) != h0.row(m.0) {
                return Err(GnnError::NotFiberConstant {
                    fiber,
                    a: first.0,
                    b: m.0,
                });
            }
        }
    }

    let run = stack.forward(g, h0)?;
    let mut layer_spreads = Vec::with_capacity(run.outputs.len());
    let mut violations = Vec::new();
    for (layer, out) in run.outputs.iter().enumerate() {
        let tolerance = SYNC_SPREAD_TOL * (1.0 + out.max_abs());
        let mut layer_max: f64 = 0.0;
        for (fiber, members) in classes.iter().enumerate() {
            let mut spread: f64 = 0.0;
            for c in 0..out.cols() {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &m in members {
                    let v = out.get(m.0, c);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                spread = spread.max(hi - lo);
            }
            layer_max = layer_max.max(spread);
            if spread > tolerance {
                violations.push(SyncViolation {
                    layer,
                    fiber,
                    spread,
                    tolerance,
                });
            }
        }
        layer_spreads.push(layer_max);
    }
    Ok(SyncCheckReport {
        layer_spreads,
        passed: violations.is_empty(),
        violations,
    })
}

/// Deviation report between a stack run on the original graph and the lifted
/// run on its base.
#[derive(Clone, Debug)]
pub struct ReductionCheck {
    /// Max elementwise `|lift(base) - original| / (1 + |original|)` over all
    /// layers.
    pub max_relative_deviation: f64,
    /// Same measure between the size-weighted base readout and the original
    /// readout.
    pub readout_deviation: f64,
}

/// Runs `stack` on `g` (from `lift(h_base)`) and on the base (from `h_base`)
/// and measures how far the lifted base run drifts from the original. The
/// original-graph run is the reference.
pub fn reduction_deviation(
    g: &DirectedMultigraph,
    b: &BaseGraph,
    stack: &LayerStack,
    h_base: &DenseMatrix,
) -> Result<ReductionCheck, GnnError> {
    let h0 = lift(b, h_base);
    let run_g = stack.forward(g, &h0)?;
    let run_b = stack.forward_on_base(b, h_base)?;

    let mut max_dev: f64 = 0.0;
    for (out_g, out_b) in run_g.outputs.iter().zip(&run_b.outputs) {
        let lifted = lift(b, out_b);
        for (a, r) in lifted.data().iter().zip(out_g.data()) {
            max_dev = max_dev.max((a - r).abs() / (1.0 + r.abs()));
        }
    }

    let r_g = readout(run_g.last(), stack.readout);
    let r_b = base_readout(b, run_b.last(), stack.readout);
    let mut readout_dev: f64 = 0.0;
    for (a, r) in r_b.iter().zip(&r_g) {
        readout_dev = readout_dev.max((a - r).abs() / (1.0 + r.abs()));
    }

    Ok(ReductionCheck {
        max_relative_deviation: max_dev,
        readout_deviation: readout_dev,
    })
}

/// Samples a random stack mixing the four layer kinds, as used by the
/// reduced-form verification harness. `edge_types` must cover every type
/// present in the target graph (for the GEC tables); attention layers are
/// drawn only when `allow_attention` (they require positive edge weights).
pub fn sample_stack(
    rng: &mut impl Rng,
    input_dim: usize,
    depth: usize,
    edge_types: &[EdgeTypeId],
    allow_attention: bool,
) -> LayerStack {
    let activations = [Activation::Relu, Activation::Sigmoid, Activation::Identity];
    let mut layers = Vec::with_capacity(depth);
    let mut dim = input_dim;
    for _ in 0..depth {
        let next = rng.random_range(1..=4);
        let scale = 0.9 / (dim as f64).sqrt();
        let kind = if allow_attention {
            rng.random_range(0..4)
        } else {
            rng.random_range(0..3)
        };
        let act = activations[rng.random_range(0..activations.len())];
        let layer = match kind {
            0 => GnnLayer::Gc {
                weight: DenseMatrix::random(rng, dim, next, -scale, scale),
                activation: act,
                binarize: rng.random_bool(0.5),
            },
            1 => GnnLayer::Gec {
                theta: DenseMatrix::random(rng, dim, next, -scale, scale),
                edge_weights: edge_types
                    .iter()
                    .map(|&ty| (ty, DenseMatrix::random(rng, dim, next, -scale, scale)))
                    .collect(),
                activation: act,
            },
            2 => {
                let hidden = rng.random_range(1..=4);
                GnnLayer::Gi {
                    epsilon: rng.random_range(-1.0..1.0),
                    inner: TwoLayerMap {
                        w1: DenseMatrix::random(rng, dim, hidden, -scale, scale),
                        w2: DenseMatrix::random(
                            rng,
                            hidden,
                            next,
                            -0.9 / (hidden as f64).sqrt(),
                            0.9 / (hidden as f64).sqrt(),
                        ),
                        activation: act,
                    },
                }
            }
            _ => GnnLayer::Ga {
                weight: DenseMatrix::random(rng, dim, next, -scale, scale),
                b1: (0..next).map(|_| rng.random_range(-0.5..0.5)).collect(),
                b2: (0..next).map(|_| rng.random_range(-0.5..0.5)).collect(),
                rho: Activation::Relu,
                activation: act,
            },
        };
        layers.push(layer);
        dim = next;
    }
    let readout = if rng.random_bool(0.5) {
        Readout::Sum
    } else {
        Readout::Mean
    };
    LayerStack { layers, readout }
}
