//! Deterministic graph and dataset generators.
//!
//! Everything here is a pure function of (parameters, seed): the same call
//! always produces the same bytes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::IoError;
use crate::fibration::{minimal_balanced_coloring, Coloring};
use crate::graph::{DirectedMultigraph, Edge, NodeId};
use crate::mlp::Dataset;

#[derive(Clone, Debug)]
pub enum GenSpec {
    /// Directed n-cycle 0 -> 1 -> ... -> 0.
    Cycle { nodes: usize },
    /// Directed chain 0 -> 1 -> ... -> n-1.
    Chain { nodes: usize },
    /// Hub with `leaves` spokes; outward means hub -> leaf.
    Star { leaves: usize, outward: bool },
    /// Each ordered pair (no self-loops) gets an edge with probability
    /// `edge_prob`, a type uniform in `0..edge_types`, weight 1.
    RandomDigraph {
        nodes: usize,
        edge_prob: f64,
        edge_types: u32,
    },
    /// Draws a random base whose minimal coloring is discrete, then blows
    /// each base node up into a fiber of 1..=max_fiber members so the planted
    /// partition is balanced by construction. The ground truth is returned
    /// and is exactly what refinement recovers.
    FiberPlanted {
        base_nodes: usize,
        max_fiber: usize,
        edge_prob: f64,
        edge_types: u32,
    },
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub graph: DirectedMultigraph,
    /// Ground-truth fiber partition for `FiberPlanted`, absent otherwise.
    pub planted: Option<Coloring>,
}

pub fn generate(spec: &GenSpec, seed: u64) -> Result<Generated, IoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *spec {
        GenSpec::Cycle { nodes } => {
            if nodes == 0 {
                return Err(IoError::InvalidParams("cycle needs nodes >= 1".into()));
            }
            let edges: Vec<(usize, usize)> = (0..nodes).map(|i| (i, (i + 1) % nodes)).collect();
            Ok(Generated {
                graph: DirectedMultigraph::from_edges(nodes, &edges, true)?,
                planted: None,
            })
        }
        GenSpec::Chain { nodes } => {
            if nodes == 0 {
                return Err(IoError::InvalidParams("chain needs nodes >= 1".into()));
            }
            let edges: Vec<(usize, usize)> = (1..nodes).map(|i| (i - 1, i)).collect();
            Ok(Generated {
                graph: DirectedMultigraph::from_edges(nodes, &edges, true)?,
                planted: None,
            })
        }
        GenSpec::Star { leaves, outward } => {
            if leaves == 0 {
                return Err(IoError::InvalidParams("star needs leaves >= 1".into()));
            }
            let edges: Vec<(usize, usize)> = (1..=leaves)
                .map(|leaf| if outward { (0, leaf) } else { (leaf, 0) })
                .collect();
            Ok(Generated {
                graph: DirectedMultigraph::from_edges(leaves + 1, &edges, true)?,
                planted: None,
            })
        }
        GenSpec::RandomDigraph {
            nodes,
            edge_prob,
            edge_types,
        } => {
            check_prob(edge_prob)?;
            if nodes == 0 || edge_types == 0 {
                return Err(IoError::InvalidParams(
                    "random digraph needs nodes >= 1 and edge_types >= 1".into(),
                ));
            }
            Ok(Generated {
                graph: random_digraph_with(&mut rng, nodes, edge_prob, edge_types)?,
                planted: None,
            })
        }
        GenSpec::FiberPlanted {
            base_nodes,
            max_fiber,
            edge_prob,
            edge_types,
        } => {
            check_prob(edge_prob)?;
            if base_nodes == 0 || max_fiber == 0 || edge_types == 0 {
                return Err(IoError::InvalidParams(
                    "planted generator needs base_nodes, max_fiber, edge_types >= 1".into(),
                ));
            }
            let (graph, planted) =
                fiber_planted_with(&mut rng, base_nodes, max_fiber, edge_prob, edge_types)?;
            Ok(Generated {
                graph,
                planted: Some(planted),
            })
        }
    }
}

fn check_prob(p: f64) -> Result<(), IoError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(IoError::InvalidParams(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Random digraph from an explicit generator stream.
pub fn random_digraph_with(
    rng: &mut impl Rng,
    nodes: usize,
    edge_prob: f64,
    edge_types: u32,
) -> Result<DirectedMultigraph, IoError> {
    let mut edges = Vec::new();
    for src in 0..nodes {
        for dst in 0..nodes {
            if src == dst {
                continue;
            }
            if rng.random_bool(edge_prob) {
                let ty = rng.random_range(0..edge_types);
                edges.push(Edge::typed(src, dst, ty, 1.0));
            }
        }
    }
    Ok(DirectedMultigraph::build(nodes, edges, None, true)?)
}

/// Planted-fiber construction from an explicit generator stream. Returns the
/// graph and the planted partition.
pub fn fiber_planted_with(
    rng: &mut impl Rng,
    base_nodes: usize,
    max_fiber: usize,
    edge_prob: f64,
    edge_types: u32,
) -> Result<(DirectedMultigraph, Coloring), IoError> {
    // Resample until the base itself has a discrete minimal coloring; any
    // residual symmetry of the base would merge planted fibers.
    let base = loop {
        let mut edges = Vec::new();
        for src in 0..base_nodes {
            for dst in 0..base_nodes {
                if rng.random_bool(edge_prob) {
                    let ty = rng.random_range(0..edge_types);
                    edges.push(Edge::typed(src, dst, ty, 1.0));
                    if rng.random_bool(0.25) {
                        edges.push(Edge::typed(src, dst, ty, 1.0));
                    }
                }
            }
        }
        let candidate = DirectedMultigraph::build(base_nodes, edges, None, true)?;
        if minimal_balanced_coloring(&candidate, false).is_discrete() {
            break candidate;
        }
    };

    let fiber_sizes: Vec<usize> = (0..base_nodes)
        .map(|_| rng.random_range(1..=max_fiber))
        .collect();
    let mut offsets = Vec::with_capacity(base_nodes);
    let mut total = 0usize;
    for &s in &fiber_sizes {
        offsets.push(total);
        total += s;
    }

    // Each member of the target fiber receives one edge per base edge, from
    // a random member of the source fiber: balanced by construction.
    let mut edges = Vec::new();
    for e in base.edges() {
        let (sy, sx) = (e.src.0, e.dst.0);
        for member in 0..fiber_sizes[sx] {
            let src_member = rng.random_range(0..fiber_sizes[sy]);
            edges.push(Edge {
                src: NodeId(offsets[sy] + src_member),
                dst: NodeId(offsets[sx] + member),
                ty: e.ty,
                weight: e.weight,
            });
        }
    }

    let mut assignment = vec![0usize; total];
    for (fiber, (&off, &size)) in offsets.iter().zip(&fiber_sizes).enumerate() {
        assignment[off..off + size].fill(fiber);
    }

    let graph = DirectedMultigraph::build(total, edges, None, true)?;
    let planted = Coloring::from_assignment(assignment)
        .map_err(IoError::InvalidParams)?;
    Ok((graph, planted))
}

/// Deterministic 10-class 28x28 grayscale dataset standing in for
/// handwritten-digit data when no IDX files are available.
///
/// Each class is coded by two 6x6 marker blocks from a fixed layout (each
/// marker is shared by two classes), drawn on a common center backdrop with
/// per-sample shift, per-pixel dropout, intensity noise, and speckle.
/// Occasionally a whole marker is missing, which makes the class genuinely
/// ambiguous: accuracy saturates below 100% and training pressure persists,
/// as on real digit data.
pub fn synthetic_digits(samples: usize, seed: u64) -> Dataset {
    const SIDE: usize = 28;
    // 6x6 marker positions on a non-overlapping grid.
    const BLOCKS: [(usize, usize); 10] = [
        (1, 1),
        (1, 10),
        (1, 19),
        (8, 1),
        (8, 19),
        (15, 1),
        (15, 19),
        (22, 1),
        (22, 10),
        (22, 19),
    ];
    // Class c shows markers (c % 5, 5 + c / 2): all pairs distinct, every
    // marker shared by exactly two classes.
    let class_blocks = |c: usize| -> (usize, usize) { (c % 5, 5 + c / 2) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % 10;
        let dr = rng.random_range(-2i32..=2);
        let dc = rng.random_range(-2i32..=2);
        // Scanned-page style: dark ink on a light field. The bright common
        // background puts all samples in a narrow cone.
        let mut img: Vec<f64> = (0..SIDE * SIDE)
            .map(|_| rng.random_range(0.88..0.92))
            .collect();
        let (b1, b2) = class_blocks(class);
        for block in [b1, b2] {
            // A dropped marker leaves the class 50/50 ambiguous.
            if rng.random_bool(0.05) {
                continue;
            }
            let (r0, c0) = BLOCKS[block];
            let ink: f64 = rng.random_range(0.5..0.68);
            for r in r0..r0 + 6 {
                for c in c0..c0 + 6 {
                    if !rng.random_bool(0.6) {
                        continue;
                    }
                    let rr = r as i32 + dr;
                    let cc = c as i32 + dc;
                    if (0..SIDE as i32).contains(&rr) && (0..SIDE as i32).contains(&cc) {
                        img[rr as usize * SIDE + cc as usize] =
                            (ink + rng.random_range(-0.06..0.06)).clamp(0.0, 1.0);
                    }
                }
            }
        }
        for _ in 0..8 {
            let px = rng.random_range(0..SIDE * SIDE);
            img[px] = img[px].min(rng.random_range(0.4..0.7));
        }
        inputs.push(img);
        labels.push(class);
    }
    Dataset::new(inputs, labels).expect("consistent by construction")
}
