//! Analytic parameter gradients for the GC and GEC layers.
//!
//! Given the upstream gradient dL/dOut, these return gradients with respect
//! to the layer parameters and the input features. Verified against central
//! finite differences by the acceptance suite.

use std::collections::BTreeMap;

use super::{gc_aggregate, gc_aggregate_transpose, DenseMatrix, GnnError, GnnLayer};
use crate::graph::{DirectedMultigraph, EdgeTypeId};

#[derive(Clone, Debug)]
pub struct GcGradients {
    pub weight: DenseMatrix,
    pub input: DenseMatrix,
}

pub fn gc_backward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
    upstream: &DenseMatrix,
) -> Result<GcGradients, GnnError> {
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
    if upstream.rows() != h.rows() || upstream.cols() != weight.cols() {
        return Err(GnnError::ShapeMismatch {
            context: "upstream gradient vs GC output",
            got: upstream.rows() * upstream.cols(),
            expected: h.rows() * weight.cols(),
        });
    }

    let agg = gc_aggregate(g, h, *binarize);
    let pre = agg.matmul(weight);
    let mut dpre = DenseMatrix::zeros(pre.rows(), pre.cols());
    for r in 0..pre.rows() {
        for c in 0..pre.cols() {
            dpre.set(r, c, upstream.get(r, c) * activation.derivative(pre.get(r, c)));
        }
    }

    let d_weight = agg.transpose().matmul(&dpre);
    let d_agg = dpre.matmul(&weight.transpose());
    let d_input = gc_aggregate_transpose(g, &d_agg, *binarize);
    Ok(GcGradients {
        weight: d_weight,
        input: d_input,
    })
}

#[derive(Clone, Debug)]
pub struct GecGradients {
    pub theta: DenseMatrix,
    pub edge_weights: BTreeMap<EdgeTypeId, DenseMatrix>,
    pub input: DenseMatrix,
}

pub fn gec_backward(
    g: &DirectedMultigraph,
    h: &DenseMatrix,
    layer: &GnnLayer,
    upstream: &DenseMatrix,
) -> Result<GecGradients, GnnError> {
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
    if upstream.rows() != h.rows() || upstream.cols() != theta.cols() {
        return Err(GnnError::ShapeMismatch {
            context: "upstream gradient vs GEC output",
            got: upstream.rows() * upstream.cols(),
            expected: h.rows() * theta.cols(),
        });
    }

    // Recompute the pre-activation.
    let hw: BTreeMap<EdgeTypeId, DenseMatrix> = edge_weights
        .iter()
        .map(|(&ty, w)| (ty, h.matmul(w)))
        .collect();
    let mut pre = h.matmul(theta);
    for u in g.nodes() {
        for &(src, ty, w) in g.in_edges(u).expect("valid node") {
            let contrib = hw.get(&ty).ok_or(GnnError::MissingEdgeType(ty))?;
            let row = pre.row_mut(u.0);
            for (o, &x) in row.iter_mut().zip(contrib.row(src.0)) {
                *o += w * x;
            }
        }
    }

    let mut dpre = DenseMatrix::zeros(pre.rows(), pre.cols());
    for r in 0..pre.rows() {
        for c in 0..pre.cols() {
            dpre.set(r, c, upstream.get(r, c) * activation.derivative(pre.get(r, c)));
        }
    }

    let d_theta = h.transpose().matmul(&dpre);
    let mut d_input = dpre.matmul(&theta.transpose());
    let mut d_tables: BTreeMap<EdgeTypeId, DenseMatrix> = edge_weights
        .keys()
        .map(|&ty| (ty, DenseMatrix::zeros(theta.rows(), theta.cols())))
        .collect();

    for u in g.nodes() {
        for &(src, ty, w) in g.in_edges(u).expect("valid node") {
            // dW_t += w * h_src^T dpre_u; dH_src += w * dpre_u W_t^T.
            let dw = d_tables.get_mut(&ty).expect("table initialized");
            for (r, &hv) in h.row(src.0).iter().enumerate() {
                let row = dw.row_mut(r);
                for (o, &dp) in row.iter_mut().zip(dpre.row(u.0)) {
                    *o += w * hv * dp;
                }
            }
            let wt = &edge_weights[&ty];
            for r in 0..wt.rows() {
                let mut acc = 0.0;
                for (c, &dp) in dpre.row(u.0).iter().enumerate() {
                    acc += wt.get(r, c) * dp;
                }
                let val = d_input.get(src.0, r) + w * acc;
                d_input.set(src.0, r, val);
            }
        }
    }

    Ok(GecGradients {
        theta: d_theta,
        edge_weights: d_tables,
        input: d_input,
    })
}
