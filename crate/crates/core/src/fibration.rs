//! Minimal balanced colorings, fibration bases, and input-tree encodings.
//!
//! A coloring (partition of the nodes) is *balanced* when all members of a
//! class receive, per class and edge category, the same number of in-edges.
//! The coarsest balanced coloring is the fixpoint of iterated in-neighborhood
//! refinement; its classes are the fibers of the minimal fibration, and the
//! quotient multigraph over the fibers is the fibration base.
//!
//! Edge categories distinguish both the edge type and the exact weight value
//! (weights are compared bit-exactly): symmetry detection is combinatorial,
//! and distinct weights behave as distinct interaction types.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{DirectedMultigraph, Edge, EdgeTypeId, GraphError, NodeAttributes, NodeId};
use crate::hash::Fnv128;

#[derive(Debug, Error)]
pub enum FibrationError {
    #[error("coloring does not fit the graph: {0}")]
    InvalidColoring(String),
    #[error(
        "coloring is not balanced: nodes {} and {} receive different numbers of \
         type-{} (weight {}) in-edges from class {}",
        .0.node_a, .0.node_b, .0.edge_type, .0.weight, .0.source_class
    )]
    Unbalanced(BalanceViolation),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A partition of the nodes into classes (fibers), with canonical class ids:
/// classes are numbered by sorting their refinement signatures, so the same
/// graph always yields the same ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    assignment: Vec<usize>,
    class_count: usize,
    history: Vec<Vec<usize>>,
}

impl Coloring {
    /// Builds a coloring from an arbitrary per-node key, canonicalizing ids.
    fn from_keys<K: Ord>(keys: &[K]) -> Self {
        let mut ids: BTreeMap<&K, usize> = BTreeMap::new();
        for k in keys {
            ids.entry(k).or_insert(0);
        }
        for (next, (_, id)) in ids.iter_mut().enumerate() {
            *id = next;
        }
        let assignment: Vec<usize> = keys.iter().map(|k| ids[k]).collect();
        Coloring {
            class_count: ids.len(),
            assignment,
            history: Vec::new(),
        }
    }

    /// The all-singletons (discrete) partition.
    pub fn singletons(node_count: usize) -> Self {
        Coloring {
            assignment: (0..node_count).collect(),
            class_count: node_count,
            history: Vec::new(),
        }
    }

    /// Builds a coloring from an explicit per-node class assignment. Class
    /// ids must be dense in `[0, max + 1)`.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self, String> {
        let class_count = assignment.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; class_count];
        for &c in &assignment {
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(format!("class id {missing} has no members"));
        }
        Ok(Coloring {
            assignment,
            class_count,
            history: Vec::new(),
        })
    }

    pub fn class_of(&self, u: NodeId) -> usize {
        self.assignment[u.0]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// Members of each class, ascending within a class.
    pub fn classes(&self) -> Vec<Vec<NodeId>> {
        let mut classes = vec![Vec::new(); self.class_count];
        for (node, &class) in self.assignment.iter().enumerate() {
            classes[class].push(NodeId(node));
        }
        classes
    }

    pub fn is_discrete(&self) -> bool {
        self.class_count == self.assignment.len()
    }

    /// Per-round assignments when produced by the fixpoint driver (first entry
    /// is the initial coloring), empty otherwise.
    pub fn history(&self) -> &[Vec<usize>] {
        &self.history
    }

    /// True when both colorings induce the same partition, ignoring class ids.
    pub fn same_partition(&self, other: &Coloring) -> bool {
        if self.assignment.len() != other.assignment.len()
            || self.class_count != other.class_count
        {
            return false;
        }
        normalize_partition(&self.assignment) == normalize_partition(&other.assignment)
    }

    fn check_fits(&self, g: &DirectedMultigraph) -> Result<(), FibrationError> {
        if self.assignment.len() != g.node_count() {
            return Err(FibrationError::InvalidColoring(format!(
                "{} assignments for {} nodes",
                self.assignment.len(),
                g.node_count()
            )));
        }
        for &c in &self.assignment {
            if c >= self.class_count {
                return Err(FibrationError::InvalidColoring(format!(
                    "class id {} out of range (class_count {})",
                    c, self.class_count
                )));
            }
        }
        Ok(())
    }
}

/// Renumbers class ids by first occurrence, for id-independent comparison.
pub fn normalize_partition(assignment: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; assignment.len()];
    let mut next = 0;
    assignment
        .iter()
        .map(|&c| {
            *map[c].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Refinement engine
// ---------------------------------------------------------------------------

/// Dense id for an edge category: (type, exact weight bits).
type RType = u32;

/// Per-graph view used by the refinement rounds.
struct RefineView {
    in_edges: Vec<Vec<(usize, RType)>>,
    out_edges: Vec<Vec<(usize, RType)>>,
    label_key: Vec<usize>,
}

impl RefineView {
    fn new(g: &DirectedMultigraph) -> Self {
        let mut rtype_ids: BTreeMap<(u32, u64), RType> = BTreeMap::new();
        for e in g.edges() {
            let key = (e.ty.0, e.weight.to_bits());
            let next = rtype_ids.len() as RType;
            rtype_ids.entry(key).or_insert(next);
        }
        let n = g.node_count();
        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for e in g.edges() {
            let rt = rtype_ids[&(e.ty.0, e.weight.to_bits())];
            in_edges[e.dst.0].push((e.src.0, rt));
            out_edges[e.src.0].push((e.dst.0, rt));
        }

        let mut label_ids: BTreeMap<Option<&str>, usize> = BTreeMap::new();
        for u in g.nodes() {
            let next = label_ids.len();
            label_ids.entry(g.label(u)).or_insert(next);
        }
        let label_key = g.nodes().map(|u| label_ids[&g.label(u)]).collect();

        RefineView {
            in_edges,
            out_edges,
            label_key,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RefineMode {
    /// In-neighborhoods only: the fibration (balanced-coloring) refinement.
    In,
    /// In- and out-neighborhoods jointly: the covering / WL refinement.
    InOut,
}

/// Sorted multiset of ((class, category), count) seen on one side of a node.
type Profile = Vec<((usize, RType), u32)>;

fn side_profile(edges: &[(usize, RType)], assignment: &[usize]) -> Profile {
    let mut counts: BTreeMap<(usize, RType), u32> = BTreeMap::new();
    for &(nb, rt) in edges {
        *counts.entry((assignment[nb], rt)).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

fn initial_keys(view: &RefineView, mode: RefineMode, use_attributes: bool) -> Vec<(usize, Profile, Profile)> {
    let n = view.in_edges.len();
    let zeros = vec![0usize; n];
    (0..n)
        .map(|u| {
            let label = if use_attributes { view.label_key[u] } else { 0 };
            let inp = side_profile(&view.in_edges[u], &zeros);
            let outp = match mode {
                RefineMode::In => Vec::new(),
                RefineMode::InOut => side_profile(&view.out_edges[u], &zeros),
            };
            (label, inp, outp)
        })
        .collect()
}

fn round_keys(view: &RefineView, mode: RefineMode, assignment: &[usize]) -> Vec<(usize, Profile, Profile)> {
    (0..assignment.len())
        .map(|u| {
            let inp = side_profile(&view.in_edges[u], assignment);
            let outp = match mode {
                RefineMode::In => Vec::new(),
                RefineMode::InOut => side_profile(&view.out_edges[u], assignment),
            };
            (assignment[u], inp, outp)
        })
        .collect()
}

fn refine_to_fixpoint(g: &DirectedMultigraph, mode: RefineMode, use_attributes: bool) -> Coloring {
    let view = RefineView::new(g);
    let mut current = Coloring::from_keys(&initial_keys(&view, mode, use_attributes));
    let mut history = vec![current.assignment.clone()];
    loop {
        let next = Coloring::from_keys(&round_keys(&view, mode, &current.assignment));
        // Refinement never merges classes; an unchanged count means fixpoint.
        if next.class_count == current.class_count {
            break;
        }
        history.push(next.assignment.clone());
        current = next;
    }
    current.history = history;
    current
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Colors nodes by (discrete label when `use_attributes`, per-category
/// in-degree profile). This is the starting point of the refinement.
pub fn initial_coloring(g: &DirectedMultigraph, use_attributes: bool) -> Coloring {
    let view = RefineView::new(g);
    Coloring::from_keys(&initial_keys(&view, RefineMode::In, use_attributes))
}

/// One refinement round: each node's new class is (old class, multiset of
/// (in-neighbor class, edge category) with multiplicity). Never merges
/// classes; ids are canonical.
pub fn refine_step(g: &DirectedMultigraph, c: &Coloring) -> Result<Coloring, FibrationError> {
    c.check_fits(g)?;
    let view = RefineView::new(g);
    Ok(Coloring::from_keys(&round_keys(
        &view,
        RefineMode::In,
        &c.assignment,
    )))
}

/// The coarsest balanced coloring: fixpoint of [`refine_step`] starting from
/// [`initial_coloring`], reached in at most `node_count` rounds. Its classes
/// are the fibers of the minimal fibration.
pub fn minimal_balanced_coloring(g: &DirectedMultigraph, use_attributes: bool) -> Coloring {
    refine_to_fixpoint(g, RefineMode::In, use_attributes)
}

/// Joint fixpoint of in- and out-refinement. Nodes in the same class have
/// both input and output trees indistinguishable; on undirected graphs this
/// coincides with [`minimal_balanced_coloring`]. Reported as an upper bound
/// for the automorphism orbit partition, which is not computed exactly.
pub fn covering_partition(g: &DirectedMultigraph, use_attributes: bool) -> Coloring {
    refine_to_fixpoint(g, RefineMode::InOut, use_attributes)
}

/// First balance violation found, as evidence for error reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceViolation {
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub source_class: usize,
    pub edge_type: EdgeTypeId,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct BalanceCheck {
    pub balanced: bool,
    pub witness: Option<BalanceViolation>,
}

/// Checks the balance condition directly (not via refinement): for every
/// class pair (X, Y) and edge category, all members of X must receive the
/// same number of in-edges of that category from Y.
pub fn is_balanced(g: &DirectedMultigraph, c: &Coloring) -> Result<BalanceCheck, FibrationError> {
    c.check_fits(g)?;
    let mut profiles: Vec<BTreeMap<(usize, u32, u64), u32>> = Vec::with_capacity(g.node_count());
    for u in g.nodes() {
        let mut counts = BTreeMap::new();
        for &(src, ty, w) in g.in_edges(u)? {
            *counts
                .entry((c.class_of(src), ty.0, w.to_bits()))
                .or_insert(0) += 1;
        }
        profiles.push(counts);
    }

    for class in c.classes() {
        let rep = class[0];
        for &other in &class[1..] {
            if profiles[rep.0] == profiles[other.0] {
                continue;
            }
            // Locate the first differing key for the witness.
            let a = &profiles[rep.0];
            let b = &profiles[other.0];
            let key = a
                .iter()
                .find(|(k, v)| b.get(k) != Some(v))
                .map(|(k, _)| *k)
                .or_else(|| b.keys().find(|k| !a.contains_key(*k)).copied())
                .expect("profiles differ");
            return Ok(BalanceCheck {
                balanced: false,
                witness: Some(BalanceViolation {
                    node_a: rep,
                    node_b: other,
                    source_class: key.0,
                    edge_type: EdgeTypeId(key.1),
                    weight: f64::from_bits(key.2),
                }),
            });
        }
    }
    Ok(BalanceCheck {
        balanced: true,
        witness: None,
    })
}

/// Quotient multigraph over the fibers of a balanced coloring, plus the
/// surjection from nodes to fibers.
#[derive(Clone, Debug)]
pub struct BaseGraph {
    base: DirectedMultigraph,
    fiber_map: Vec<usize>,
    fiber_members: Vec<Vec<NodeId>>,
    original_node_count: usize,
}

impl BaseGraph {
    pub fn base(&self) -> &DirectedMultigraph {
        &self.base
    }

    pub fn fiber_count(&self) -> usize {
        self.fiber_members.len()
    }

    pub fn fiber_of(&self, u: NodeId) -> usize {
        self.fiber_map[u.0]
    }

    pub fn fiber_map(&self) -> &[usize] {
        &self.fiber_map
    }

    pub fn fiber_members(&self) -> &[Vec<NodeId>] {
        &self.fiber_members
    }

    pub fn original_node_count(&self) -> usize {
        self.original_node_count
    }

    /// |N_B| / |N_G|, in (0, 1].
    pub fn compression_factor(&self) -> f64 {
        self.fiber_count() as f64 / self.original_node_count as f64
    }
}

/// Builds the fibration base of `g` under a balanced coloring: one base node
/// per class; the in-neighborhood of any member, with node ids replaced by
/// class ids, becomes the in-edge bundle of its base node. Balance guarantees
/// the result does not depend on which member is used.
pub fn build_base(g: &DirectedMultigraph, c: &Coloring) -> Result<BaseGraph, FibrationError> {
    let check = is_balanced(g, c)?;
    if let Some(witness) = check.witness {
        return Err(FibrationError::Unbalanced(witness));
    }

    let fiber_members = c.classes();
    let mut edges = Vec::new();
    for (x, members) in fiber_members.iter().enumerate() {
        let rep = members[0];
        for &(src, ty, w) in g.in_edges(rep)? {
            edges.push(Edge {
                src: NodeId(c.class_of(src)),
                dst: NodeId(x),
                ty,
                weight: w,
            });
        }
    }

    // Fiber label: kept only when every member agrees.
    let labels: Vec<Option<String>> = if g.has_labels() {
        fiber_members
            .iter()
            .map(|members| {
                let first = g.label(members[0]);
                if members.iter().all(|&u| g.label(u) == first) {
                    first.map(str::to_string)
                } else {
                    None
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    // The quotient of an undirected graph is a directed multigraph in general
    // (fibers of different sizes receive asymmetric bundle multiplicities).
    let base = DirectedMultigraph::build(
        fiber_members.len(),
        edges,
        Some(NodeAttributes {
            labels,
            features: Vec::new(),
        }),
        true,
    )?;

    Ok(BaseGraph {
        base,
        fiber_map: c.assignment.clone(),
        fiber_members,
        original_node_count: g.node_count(),
    })
}

/// |N_B| / |N_G| for a base built from `g`.
pub fn compression_factor(g: &DirectedMultigraph, b: &BaseGraph) -> f64 {
    assert_eq!(
        b.original_node_count(),
        g.node_count(),
        "base was not built from this graph"
    );
    b.compression_factor()
}

// ---------------------------------------------------------------------------
// Input trees
// ---------------------------------------------------------------------------

/// Depth-truncated input tree of a node, as canonical per-depth codes.
///
/// `layer_codes[d]` encodes the depth-`d` truncation: node labels (when the
/// graph is labeled) and the sorted multiset of (edge type, weight, child
/// code) per node, hashed content-addressed so encodings are comparable
/// across graphs. Two nodes have equal encodings at depth `node_count` iff
/// they lie in the same fiber of the minimal balanced coloring.
#[derive(Clone, Debug)]
pub struct InputTree {
    pub root: NodeId,
    pub depth: usize,
    layer_codes: Vec<u128>,
}

impl InputTree {
    pub fn layer_codes(&self) -> &[u128] {
        &self.layer_codes
    }

    /// Code of the full depth-truncated tree.
    pub fn code(&self) -> u128 {
        *self.layer_codes.last().expect("at least depth 0")
    }
}

/// Tree equality ignores the root id: only shape, labels, and edge categories
/// count.
impl PartialEq for InputTree {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.layer_codes == other.layer_codes
    }
}

impl Eq for InputTree {}

/// Per-node tree codes for depths `0..=depth`; `codes[d][u]` is the code of
/// node `u`'s depth-`d` truncated input tree.
pub(crate) fn input_tree_codes(g: &DirectedMultigraph, depth: usize) -> Vec<Vec<u128>> {
    let n = g.node_count();
    let base: Vec<u128> = g
        .nodes()
        .map(|u| {
            let mut h = Fnv128::new();
            h.write_u8(0x10);
            h.write_opt_str(g.label(u));
            h.finish()
        })
        .collect();

    let mut codes = Vec::with_capacity(depth + 1);
    codes.push(base);
    for d in 1..=depth {
        let prev = &codes[d - 1];
        let level: Vec<u128> = (0..n)
            .map(|u| {
                let mut children: Vec<(u32, u64, u128)> = g
                    .in_edges(NodeId(u))
                    .expect("valid node")
                    .iter()
                    .map(|&(src, ty, w)| (ty.0, w.to_bits(), prev[src.0]))
                    .collect();
                children.sort_unstable();
                let mut h = Fnv128::new();
                h.write_u8(0x11);
                h.write_opt_str(g.label(NodeId(u)));
                h.write_usize(children.len());
                for (ty, w, code) in children {
                    h.write_u32(ty);
                    h.write_u64(w);
                    h.write_u128(code);
                }
                h.finish()
            })
            .collect();
        codes.push(level);
    }
    codes
}

/// Canonical encoding of the depth-truncated tree of all in-paths ending at
/// `u`. The untruncated tree is typically infinite; depth `node_count`
/// suffices to separate fibers.
pub fn input_tree(g: &DirectedMultigraph, u: NodeId, depth: usize) -> Result<InputTree, GraphError> {
    if u.0 >= g.node_count() {
        return Err(GraphError::InvalidNode(u.0));
    }
    let codes = input_tree_codes(g, depth);
    Ok(InputTree {
        root: u,
        depth,
        layer_codes: codes.iter().map(|level| level[u.0]).collect(),
    })
}

/// Groups nodes by their depth-`depth` input-tree encoding.
pub fn input_tree_classes(g: &DirectedMultigraph, depth: usize) -> Coloring {
    let codes = input_tree_codes(g, depth);
    let last = codes.last().expect("depth 0 exists");
    Coloring::from_keys(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> DirectedMultigraph {
        DirectedMultigraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], true).unwrap()
    }

    fn chain3() -> DirectedMultigraph {
        DirectedMultigraph::from_edges(3, &[(0, 1), (1, 2)], true).unwrap()
    }

    /// Tricyclo[5.1.0.0^3,5]octane: 8 carbons, 12 hydrogens, single bonds.
    pub(crate) fn tricyclooctane() -> DirectedMultigraph {
        let cc = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (0, 7),
            (7, 6),
            (0, 6),
            (2, 4),
        ];
        // One H on each ring-junction carbon {0,2,4,6}, two on the others.
        let ch = [
            (0, 8),
            (2, 9),
            (4, 10),
            (6, 11),
            (1, 12),
            (1, 13),
            (3, 14),
            (3, 15),
            (5, 16),
            (5, 17),
            (7, 18),
            (7, 19),
        ];
        let mut edges: Vec<(usize, usize)> = cc.to_vec();
        edges.extend_from_slice(&ch);
        let labels: Vec<&str> = (0..20).map(|i| if i < 8 { "C" } else { "H" }).collect();
        DirectedMultigraph::from_edges_labeled(20, &edges, &labels, false).unwrap()
    }

    #[test]
    fn initial_coloring_uniform_on_cycle() {
        let c = initial_coloring(&cycle3(), false);
        assert_eq!(c.class_count(), 1);
    }

    #[test]
    fn initial_coloring_splits_chain_by_in_degree() {
        let c = initial_coloring(&chain3(), false);
        assert_eq!(c.class_count(), 2);
        assert_eq!(c.class_of(NodeId(1)), c.class_of(NodeId(2)));
        assert_ne!(c.class_of(NodeId(0)), c.class_of(NodeId(1)));
    }

    #[test]
    fn initial_coloring_never_mixes_labels() {
        let g = tricyclooctane();
        let c = initial_coloring(&g, true);
        for class in c.classes() {
            let first = g.label(class[0]);
            assert!(class.iter().all(|&u| g.label(u) == first));
        }
    }

    #[test]
    fn refine_step_splits_chain_tail() {
        let g = chain3();
        let c0 = initial_coloring(&g, false);
        let c1 = refine_step(&g, &c0).unwrap();
        assert_eq!(c1.class_count(), 3);
    }

    #[test]
    fn refine_step_fixpoint_on_cycle() {
        let g = cycle3();
        let c0 = initial_coloring(&g, false);
        let c1 = refine_step(&g, &c0).unwrap();
        assert_eq!(c1.class_count(), 1);
    }

    #[test]
    fn refine_step_fixpoint_on_in_star() {
        let g = DirectedMultigraph::from_edges(3, &[(0, 2), (1, 2)], true).unwrap();
        let c0 = initial_coloring(&g, false);
        assert_eq!(c0.class_count(), 2);
        let c1 = refine_step(&g, &c0).unwrap();
        assert_eq!(c1.class_count(), 2);
        assert!(c1.same_partition(&c0));
    }

    #[test]
    fn cycle_collapses_to_one_fiber() {
        let c = minimal_balanced_coloring(&cycle3(), false);
        assert_eq!(c.class_count(), 1);
    }

    #[test]
    fn hub_splits_into_two_fibers() {
        let g = DirectedMultigraph::from_edges(3, &[(0, 1), (0, 2)], true).unwrap();
        let c = minimal_balanced_coloring(&g, false);
        assert_eq!(c.class_count(), 2);
        assert_eq!(c.class_of(NodeId(1)), c.class_of(NodeId(2)));
    }

    #[test]
    fn tricyclooctane_has_four_fibers() {
        let g = tricyclooctane();
        let c = minimal_balanced_coloring(&g, true);
        assert_eq!(c.class_count(), 4);
        let mut sizes: Vec<usize> = c.classes().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![4, 4, 4, 8]);
        // The size-8 fiber is hydrogens; carbons split 4/4.
        for class in c.classes() {
            if class.len() == 8 {
                assert!(class.iter().all(|&u| g.label(u) == Some("H")));
            }
        }
    }

    #[test]
    fn minimal_coloring_is_balanced() {
        for g in [cycle3(), chain3(), tricyclooctane()] {
            let c = minimal_balanced_coloring(&g, true);
            assert!(is_balanced(&g, &c).unwrap().balanced);
        }
    }

    #[test]
    fn unbalanced_single_class_on_chain_has_witness() {
        let g = chain3();
        let c = Coloring {
            assignment: vec![0, 0, 0],
            class_count: 1,
            history: Vec::new(),
        };
        let check = is_balanced(&g, &c).unwrap();
        assert!(!check.balanced);
        let w = check.witness.unwrap();
        // Node 0 has in-degree 0, the others 1.
        assert_eq!(w.node_a, NodeId(0));
    }

    #[test]
    fn discrete_partition_is_vacuously_balanced() {
        let g = tricyclooctane();
        let c = Coloring::singletons(g.node_count());
        assert!(is_balanced(&g, &c).unwrap().balanced);
    }

    #[test]
    fn hub_base_has_single_bundle_edge() {
        let g = DirectedMultigraph::from_edges(3, &[(0, 1), (0, 2)], true).unwrap();
        let c = minimal_balanced_coloring(&g, false);
        let b = build_base(&g, &c).unwrap();
        assert_eq!(b.base().node_count(), 2);
        assert_eq!(b.base().edge_count(), 1);
        let e = b.base().edges()[0];
        assert_eq!(e.src.0, b.fiber_of(NodeId(0)));
        assert_eq!(e.dst.0, b.fiber_of(NodeId(1)));
    }

    #[test]
    fn cycle_base_is_single_self_loop() {
        let g = cycle3();
        let c = minimal_balanced_coloring(&g, false);
        let b = build_base(&g, &c).unwrap();
        assert_eq!(b.base().node_count(), 1);
        assert_eq!(b.base().edge_count(), 1);
        let e = b.base().edges()[0];
        assert_eq!(e.src, e.dst);
    }

    #[test]
    fn tricyclooctane_base_matches_expected_bundles() {
        let g = tricyclooctane();
        let c = minimal_balanced_coloring(&g, true);
        let b = build_base(&g, &c).unwrap();
        assert_eq!(b.base().node_count(), 4);
        assert!((b.compression_factor() - 0.2).abs() < 1e-15);

        // Identify the fibers by size and label.
        let ch_c = c.class_of(NodeId(0)); // junction carbons (1 H each)
        let ch2_c = c.class_of(NodeId(1)); // CH2 carbons
        let h_on_ch = c.class_of(NodeId(8));
        let h_on_ch2 = c.class_of(NodeId(12));
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in b.base().edges() {
            *counts.entry((e.src.0, e.dst.0)).or_insert(0) += 1;
        }
        // Junction carbon: 1 junction-C, 2 CH2-C, 1 H in-edges.
        assert_eq!(counts.get(&(ch_c, ch_c)), Some(&1));
        assert_eq!(counts.get(&(ch2_c, ch_c)), Some(&2));
        assert_eq!(counts.get(&(h_on_ch, ch_c)), Some(&1));
        // CH2 carbon: 2 junction-C, 2 H in-edges.
        assert_eq!(counts.get(&(ch_c, ch2_c)), Some(&2));
        assert_eq!(counts.get(&(h_on_ch2, ch2_c)), Some(&2));
        // Hydrogens: a single carbon in-edge.
        assert_eq!(counts.get(&(ch_c, h_on_ch)), Some(&1));
        assert_eq!(counts.get(&(ch2_c, h_on_ch2)), Some(&1));
    }

    #[test]
    fn build_base_rejects_unbalanced_coloring() {
        let g = chain3();
        let c = Coloring {
            assignment: vec![0, 0, 0],
            class_count: 1,
            history: Vec::new(),
        };
        let err = build_base(&g, &c).unwrap_err();
        assert!(matches!(err, FibrationError::Unbalanced(_)));
    }

    #[test]
    fn source_node_tree_is_root_only() {
        let g = chain3();
        let t0 = input_tree(&g, NodeId(0), 4).unwrap();
        let empty = DirectedMultigraph::from_edges(1, &[], true).unwrap();
        let iso = input_tree(&empty, NodeId(0), 4).unwrap();
        assert_eq!(t0, iso);
    }

    #[test]
    fn cycle_trees_all_equal() {
        let g = cycle3();
        let t: Vec<InputTree> = (0..3)
            .map(|u| input_tree(&g, NodeId(u), 3).unwrap())
            .collect();
        assert_eq!(t[0], t[1]);
        assert_eq!(t[1], t[2]);
    }

    #[test]
    fn chain_trees_differ_at_depth_two() {
        let g = chain3();
        let t1 = input_tree(&g, NodeId(1), 2).unwrap();
        let t2 = input_tree(&g, NodeId(2), 2).unwrap();
        assert_eq!(t1.layer_codes()[1], t2.layer_codes()[1]);
        assert_ne!(t1, t2);
    }

    #[test]
    fn compression_factor_examples() {
        let g = tricyclooctane();
        let b = build_base(&g, &minimal_balanced_coloring(&g, true)).unwrap();
        assert_eq!(compression_factor(&g, &b), 0.2);

        let chain = chain3();
        let b = build_base(&chain, &minimal_balanced_coloring(&chain, false)).unwrap();
        assert_eq!(b.fiber_count(), 3);
        assert_eq!(compression_factor(&chain, &b), 1.0);

        let cyc = cycle3();
        let b = build_base(&cyc, &minimal_balanced_coloring(&cyc, false)).unwrap();
        assert!((compression_factor(&cyc, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn covering_partition_equals_fibration_on_undirected() {
        let g = tricyclooctane();
        let fib = minimal_balanced_coloring(&g, true);
        let cov = covering_partition(&g, true);
        assert!(fib.same_partition(&cov));
    }

    #[test]
    fn history_records_rounds() {
        let g = chain3();
        let c = minimal_balanced_coloring(&g, false);
        assert!(c.history().len() >= 2);
        assert_eq!(c.history()[0].len(), 3);
    }
}
