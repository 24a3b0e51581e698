//! Directed multigraphs with typed, weighted parallel edges and node attributes.
//!
//! Graphs are immutable after construction: every query is a pure function, so
//! graphs can be shared freely across threads. Parallel edges and self-loops
//! are permitted; undirected graphs are stored as their symmetric closure.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Dense node index in `[0, node_count)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Small integer identifying an interaction type (bond order, interaction
/// color, ...). Edges of different types are never merged or counted together.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct EdgeTypeId(pub u32);

impl fmt::Display for EdgeTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A single directed edge. Parallel edges are represented by repetition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub ty: EdgeTypeId,
    pub weight: f64,
}

impl Edge {
    /// Type-0, weight-1 edge.
    pub fn new(src: usize, dst: usize) -> Self {
        Edge {
            src: NodeId(src),
            dst: NodeId(dst),
            ty: EdgeTypeId(0),
            weight: 1.0,
        }
    }

    pub fn typed(src: usize, dst: usize, ty: u32, weight: f64) -> Self {
        Edge {
            src: NodeId(src),
            dst: NodeId(dst),
            ty: EdgeTypeId(ty),
            weight,
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge {index}: endpoint {node} out of range for graph with {node_count} nodes")]
    EndpointOutOfRange {
        index: usize,
        node: usize,
        node_count: usize,
    },
    #[error("edge {index}: weight is not finite")]
    NonFiniteWeight { index: usize },
    #[error("node {0} out of range")]
    InvalidNode(usize),
    #[error("{what} has {got} entries, expected {expected} (one per node)")]
    AttributeLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("feature vector of node {node} has length {got}, expected {expected}")]
    FeatureDim {
        node: usize,
        got: usize,
        expected: usize,
    },
}

/// Optional per-node attributes: a discrete label (used by symmetry
/// detection) and a real feature vector (payload for the GNN layers).
#[derive(Clone, Debug, Default)]
pub struct NodeAttributes {
    /// One entry per node, or empty for an unlabeled graph.
    pub labels: Vec<Option<String>>,
    /// One entry per node, or empty. All present vectors must share a length.
    pub features: Vec<Option<Vec<f64>>>,
}

/// Aggregated in-neighborhood entry: all parallel edges from `neighbor` of a
/// given type, collapsed to a multiplicity and a total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct InNeighborEntry {
    pub neighbor: NodeId,
    pub ty: EdgeTypeId,
    pub multiplicity: usize,
    pub total_weight: f64,
}

/// Deterministic view of a node's in-neighborhood, sorted by (neighbor, type).
#[derive(Clone, Debug, PartialEq)]
pub struct InNeighborhoodView {
    pub node: NodeId,
    pub entries: Vec<InNeighborEntry>,
}

#[derive(Clone, Debug)]
pub struct DirectedMultigraph {
    node_count: usize,
    directed: bool,
    edges: Vec<Edge>,
    labels: Vec<Option<String>>,
    features: Vec<Option<Vec<f64>>>,
    // Per-node incidence lists sorted by (neighbor, type, weight bits).
    in_adj: Vec<Vec<(NodeId, EdgeTypeId, f64)>>,
    out_adj: Vec<Vec<(NodeId, EdgeTypeId, f64)>>,
}

impl DirectedMultigraph {
    /// Validates and builds a graph. With `directed = false` the stored edge
    /// set is closed under (source, target) swap: each input edge `u-v` with
    /// `u != v` is stored as the pair `u->v`, `v->u`; self-loops are stored
    /// once.
    pub fn build(
        node_count: usize,
        edges: Vec<Edge>,
        attrs: Option<NodeAttributes>,
        directed: bool,
    ) -> Result<Self, GraphError> {
        for (index, e) in edges.iter().enumerate() {
            for node in [e.src.0, e.dst.0] {
                if node >= node_count {
                    return Err(GraphError::EndpointOutOfRange {
                        index,
                        node,
                        node_count,
                    });
                }
            }
            if !e.weight.is_finite() {
                return Err(GraphError::NonFiniteWeight { index });
            }
        }

        let mut stored = Vec::with_capacity(if directed { edges.len() } else { 2 * edges.len() });
        for e in &edges {
            stored.push(*e);
            if !directed && e.src != e.dst {
                stored.push(Edge {
                    src: e.dst,
                    dst: e.src,
                    ty: e.ty,
                    weight: e.weight,
                });
            }
        }

        let (labels, features) = match attrs {
            Some(a) => {
                if !a.labels.is_empty() && a.labels.len() != node_count {
                    return Err(GraphError::AttributeLength {
                        what: "label list",
                        got: a.labels.len(),
                        expected: node_count,
                    });
                }
                if !a.features.is_empty() && a.features.len() != node_count {
                    return Err(GraphError::AttributeLength {
                        what: "feature list",
                        got: a.features.len(),
                        expected: node_count,
                    });
                }
                let mut dim = None;
                for (node, f) in a.features.iter().enumerate() {
                    if let Some(v) = f {
                        match dim {
                            None => dim = Some(v.len()),
                            Some(d) if d != v.len() => {
                                return Err(GraphError::FeatureDim {
                                    node,
                                    got: v.len(),
                                    expected: d,
                                });
                            }
                            _ => {}
                        }
                    }
                }
                (a.labels, a.features)
            }
            None => (Vec::new(), Vec::new()),
        };

        let mut in_adj: Vec<Vec<(NodeId, EdgeTypeId, f64)>> = vec![Vec::new(); node_count];
        let mut out_adj: Vec<Vec<(NodeId, EdgeTypeId, f64)>> = vec![Vec::new(); node_count];
        for e in &stored {
            in_adj[e.dst.0].push((e.src, e.ty, e.weight));
            out_adj[e.src.0].push((e.dst, e.ty, e.weight));
        }
        let key = |t: &(NodeId, EdgeTypeId, f64)| (t.0, t.1, t.2.to_bits());
        for list in in_adj.iter_mut().chain(out_adj.iter_mut()) {
            list.sort_by_key(key);
        }

        Ok(DirectedMultigraph {
            node_count,
            directed,
            edges: stored,
            labels,
            features,
            in_adj,
            out_adj,
        })
    }

    /// Unlabeled graph from plain (src, dst) pairs, type 0, weight 1.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize)],
        directed: bool,
    ) -> Result<Self, GraphError> {
        let edges = edges.iter().map(|&(s, d)| Edge::new(s, d)).collect();
        Self::build(node_count, edges, None, directed)
    }

    /// Labeled graph from plain (src, dst) pairs, type 0, weight 1.
    pub fn from_edges_labeled(
        node_count: usize,
        edges: &[(usize, usize)],
        labels: &[&str],
        directed: bool,
    ) -> Result<Self, GraphError> {
        let edges = edges.iter().map(|&(s, d)| Edge::new(s, d)).collect();
        let attrs = NodeAttributes {
            labels: labels.iter().map(|s| Some((*s).to_string())).collect(),
            features: Vec::new(),
        };
        Self::build(node_count, edges, Some(attrs), directed)
    }

    /// Rebuilds this graph as undirected (symmetric closure of the stored
    /// edges, with the stored multiset treated as undirected edges).
    pub fn to_undirected(&self) -> Result<Self, GraphError> {
        let attrs = NodeAttributes {
            labels: self.labels.clone(),
            features: self.features.clone(),
        };
        Self::build(self.node_count, self.edges.clone(), Some(attrs), false)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    /// The stored edge list (already symmetrized for undirected graphs).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(|l| l.is_some())
    }

    pub fn label(&self, u: NodeId) -> Option<&str> {
        self.labels.get(u.0).and_then(|l| l.as_deref())
    }

    pub fn node_features(&self, u: NodeId) -> Option<&[f64]> {
        self.features.get(u.0).and_then(|f| f.as_deref())
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn features(&self) -> &[Option<Vec<f64>>] {
        &self.features
    }

    fn check_node(&self, u: NodeId) -> Result<(), GraphError> {
        if u.0 >= self.node_count {
            return Err(GraphError::InvalidNode(u.0));
        }
        Ok(())
    }

    /// Raw in-edges of `u` as (source, type, weight), sorted.
    pub fn in_edges(&self, u: NodeId) -> Result<&[(NodeId, EdgeTypeId, f64)], GraphError> {
        self.check_node(u)?;
        Ok(&self.in_adj[u.0])
    }

    /// Raw out-edges of `u` as (target, type, weight), sorted.
    pub fn out_edges(&self, u: NodeId) -> Result<&[(NodeId, EdgeTypeId, f64)], GraphError> {
        self.check_node(u)?;
        Ok(&self.out_adj[u.0])
    }

    /// Aggregated in-neighborhood of `u`: one entry per (neighbor, type) with
    /// multiplicity and total weight, sorted by (neighbor, type).
    pub fn in_neighbors(&self, u: NodeId) -> Result<InNeighborhoodView, GraphError> {
        self.check_node(u)?;
        let mut entries: Vec<InNeighborEntry> = Vec::new();
        for &(src, ty, w) in &self.in_adj[u.0] {
            match entries.last_mut() {
                Some(last) if last.neighbor == src && last.ty == ty => {
                    last.multiplicity += 1;
                    last.total_weight += w;
                }
                _ => entries.push(InNeighborEntry {
                    neighbor: src,
                    ty,
                    multiplicity: 1,
                    total_weight: w,
                }),
            }
        }
        Ok(InNeighborhoodView { node: u, entries })
    }

    /// Per-type in-degree of `u`, counting multiplicity.
    pub fn in_degree_profile(&self, u: NodeId) -> Result<BTreeMap<EdgeTypeId, usize>, GraphError> {
        self.check_node(u)?;
        let mut profile = BTreeMap::new();
        for &(_, ty, _) in &self.in_adj[u.0] {
            *profile.entry(ty).or_insert(0) += 1;
        }
        Ok(profile)
    }

    pub fn in_degree(&self, u: NodeId) -> Result<usize, GraphError> {
        self.check_node(u)?;
        Ok(self.in_adj[u.0].len())
    }

    pub fn out_degree(&self, u: NodeId) -> Result<usize, GraphError> {
        self.check_node(u)?;
        Ok(self.out_adj[u.0].len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_cycle_echoes_input() {
        let g = DirectedMultigraph::from_edges(3, &[(1, 2), (2, 0), (0, 1)], true).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_directed());
    }

    #[test]
    fn undirected_edge_stored_both_ways() {
        let g = DirectedMultigraph::from_edges(2, &[(0, 1)], false).unwrap();
        let mut pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.src.0, e.dst.0)).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn out_of_range_endpoint_reports_edge_index() {
        let err = DirectedMultigraph::from_edges(3, &[(0, 1), (0, 5)], true).unwrap_err();
        match err {
            GraphError::EndpointOutOfRange { index, node, node_count } => {
                assert_eq!(index, 1);
                assert_eq!(node, 5);
                assert_eq!(node_count, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn in_neighbors_single_edge() {
        let g = DirectedMultigraph::from_edges(4, &[(1, 2), (2, 3), (3, 1)], true).unwrap();
        let view = g.in_neighbors(NodeId(2)).unwrap();
        assert_eq!(view.entries.len(), 1);
        assert_eq!(view.entries[0].neighbor, NodeId(1));
        assert_eq!(view.entries[0].multiplicity, 1);
    }

    #[test]
    fn in_neighbors_counts_parallel_edges() {
        let g = DirectedMultigraph::from_edges(2, &[(0, 1), (0, 1)], true).unwrap();
        let view = g.in_neighbors(NodeId(1)).unwrap();
        assert_eq!(view.entries.len(), 1);
        assert_eq!(view.entries[0].multiplicity, 2);
        assert_eq!(view.entries[0].total_weight, 2.0);
    }

    #[test]
    fn in_neighbors_empty_for_source() {
        let g = DirectedMultigraph::from_edges(3, &[(0, 2), (1, 2)], true).unwrap();
        assert!(g.in_neighbors(NodeId(0)).unwrap().entries.is_empty());
        assert!(g.in_neighbors(NodeId(9)).is_err());
    }

    #[test]
    fn in_degree_profile_counts_by_type() {
        let star = DirectedMultigraph::from_edges(3, &[(0, 2), (1, 2)], true).unwrap();
        let profile = star.in_degree_profile(NodeId(2)).unwrap();
        assert_eq!(profile.get(&EdgeTypeId(0)), Some(&2));
        assert!(star.in_degree_profile(NodeId(0)).unwrap().is_empty());

        let typed = DirectedMultigraph::build(
            3,
            vec![Edge::typed(0, 2, 0, 1.0), Edge::typed(1, 2, 1, 1.0)],
            None,
            true,
        )
        .unwrap();
        let profile = typed.in_degree_profile(NodeId(2)).unwrap();
        assert_eq!(profile.get(&EdgeTypeId(0)), Some(&1));
        assert_eq!(profile.get(&EdgeTypeId(1)), Some(&1));
    }

    #[test]
    fn profile_sum_matches_in_edge_count() {
        let g = DirectedMultigraph::from_edges(
            4,
            &[(0, 1), (0, 1), (2, 1), (3, 2), (1, 0)],
            true,
        )
        .unwrap();
        for u in g.nodes() {
            let total: usize = g.in_degree_profile(u).unwrap().values().sum();
            assert_eq!(total, g.in_edges(u).unwrap().len());
        }
    }

    #[test]
    fn undirected_multiplicity_is_symmetric() {
        let g =
            DirectedMultigraph::from_edges(3, &[(0, 1), (0, 1), (1, 2), (2, 2)], false).unwrap();
        for u in g.nodes() {
            for v in g.nodes() {
                let count = |a: NodeId, b: NodeId| {
                    g.edges()
                        .iter()
                        .filter(|e| e.src == a && e.dst == b)
                        .count()
                };
                assert_eq!(count(u, v), count(v, u));
            }
        }
    }

    #[test]
    fn queries_are_pure() {
        let g = DirectedMultigraph::from_edges(3, &[(0, 1), (2, 1)], true).unwrap();
        let a = g.in_neighbors(NodeId(1)).unwrap();
        let b = g.in_neighbors(NodeId(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_feature_dims_rejected() {
        let attrs = NodeAttributes {
            labels: Vec::new(),
            features: vec![Some(vec![1.0, 2.0]), Some(vec![3.0])],
        };
        let err = DirectedMultigraph::build(2, Vec::new(), Some(attrs), true).unwrap_err();
        assert!(matches!(err, GraphError::FeatureDim { .. }));
    }
}
