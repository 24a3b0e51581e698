#![allow(dead_code)] // each test target uses a different subset

//! Shared oracles for the integration suites. Everything here is written
//! against the public graph API only and independently of the refinement
//! implementation it is used to check.

use std::collections::{BTreeMap, HashMap};

use fibra_core::graph::{DirectedMultigraph, NodeId};

/// Canonical first-occurrence renumbering for id-independent comparison.
pub fn normalize(assignment: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut next = 0;
    assignment
        .iter()
        .map(|&c| {
            *map.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Balance checker over explicit partitions, reimplemented from the
/// definition: every member of a class must receive identical per-(class,
/// edge-category) in-edge counts. Edge categories are (type, exact weight).
pub struct BalanceOracle {
    n: usize,
    rtype_count: usize,
    in_lists: Vec<Vec<(usize, usize)>>,
    degree_key: Vec<Vec<usize>>,
}

impl BalanceOracle {
    pub fn new(g: &DirectedMultigraph) -> Self {
        let mut rtypes: BTreeMap<(u32, u64), usize> = BTreeMap::new();
        for e in g.edges() {
            let next = rtypes.len();
            rtypes.entry((e.ty.0, e.weight.to_bits())).or_insert(next);
        }
        let n = g.node_count();
        let mut in_lists = vec![Vec::new(); n];
        for e in g.edges() {
            in_lists[e.dst.0].push((e.src.0, rtypes[&(e.ty.0, e.weight.to_bits())]));
        }
        // Total per-category in-degree: any balanced partition must separate
        // nodes that differ here (sum the balance condition over classes).
        let degree_key = (0..n)
            .map(|u| {
                let mut counts = vec![0usize; rtypes.len()];
                for &(_, rt) in &in_lists[u] {
                    counts[rt] += 1;
                }
                counts
            })
            .collect();
        BalanceOracle {
            n,
            rtype_count: rtypes.len().max(1),
            in_lists,
            degree_key,
        }
    }

    pub fn is_balanced(&self, assignment: &[usize], class_count: usize) -> bool {
        let kt = class_count * self.rtype_count;
        let mut rep: Vec<Option<Vec<u32>>> = vec![None; class_count];
        let mut buf = vec![0u32; kt];
        let mut touched: Vec<usize> = Vec::with_capacity(16);
        for u in 0..self.n {
            for &(src, rt) in &self.in_lists[u] {
                let idx = assignment[src] * self.rtype_count + rt;
                if buf[idx] == 0 {
                    touched.push(idx);
                }
                buf[idx] += 1;
            }
            let mut profile: Vec<(usize, u32)> =
                touched.iter().map(|&idx| (idx, buf[idx])).collect();
            profile.sort_unstable();
            for idx in touched.drain(..) {
                buf[idx] = 0;
            }
            let packed: Vec<u32> = profile
                .iter()
                .flat_map(|&(idx, c)| [idx as u32, c])
                .collect();
            match &rep[assignment[u]] {
                None => rep[assignment[u]] = Some(packed),
                Some(r) => {
                    if *r != packed {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Enumerates every partition of the nodes (restricted growth strings,
    /// pruned by the per-category in-degree invariant) and returns the
    /// balanced partition with the fewest classes. The coarsest balanced
    /// partition is unique, so ties cannot occur.
    pub fn coarsest_balanced(&self) -> (Vec<usize>, usize) {
        let mut best: Option<(Vec<usize>, usize)> = None;
        let mut assignment = vec![0usize; self.n];
        let mut class_key: Vec<usize> = Vec::with_capacity(self.n);
        self.enumerate(&mut assignment, 0, &mut class_key, &mut best);
        best.expect("the discrete partition is always balanced")
    }

    fn enumerate(
        &self,
        assignment: &mut Vec<usize>,
        pos: usize,
        class_key: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, usize)>,
    ) {
        if pos == self.n {
            let k = class_key.len();
            if best.as_ref().is_none_or(|(_, bk)| k < *bk)
                && self.is_balanced(assignment, k)
            {
                *best = Some((assignment.clone(), k));
            }
            return;
        }
        // Class counts never decrease deeper in the tree, so any branch that
        // already matches the best cannot improve on it.
        if let Some((_, bk)) = best {
            if class_key.len() >= *bk {
                return;
            }
        }
        for c in 0..class_key.len() {
            if self.degree_key[class_key[c]] == self.degree_key[pos] {
                assignment[pos] = c;
                self.enumerate(assignment, pos + 1, class_key, best);
            }
        }
        assignment[pos] = class_key.len();
        class_key.push(pos);
        self.enumerate(assignment, pos + 1, class_key, best);
        class_key.pop();
    }
}

/// Exhaustive isomorphism over all bijections, preserving labels, types,
/// weights, and multiplicities. Intended for graphs of at most ~8 nodes.
pub fn brute_force_isomorphic(a: &DirectedMultigraph, b: &DirectedMultigraph) -> bool {
    let n = a.node_count();
    if n != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let adj = |g: &DirectedMultigraph| -> HashMap<(usize, usize), Vec<(u32, u64)>> {
        let mut map: HashMap<(usize, usize), Vec<(u32, u64)>> = HashMap::new();
        for e in g.edges() {
            map.entry((e.src.0, e.dst.0))
                .or_default()
                .push((e.ty.0, e.weight.to_bits()));
        }
        for v in map.values_mut() {
            v.sort_unstable();
        }
        map
    };
    let adj_a = adj(a);
    let adj_b = adj(b);
    let empty: Vec<(u32, u64)> = Vec::new();
    let at = |m: &HashMap<(usize, usize), Vec<(u32, u64)>>, k: (usize, usize)| {
        m.get(&k).cloned().unwrap_or_else(|| empty.clone())
    };

    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let ok = (0..n).all(|u| a.label(NodeId(u)) == b.label(NodeId(perm[u])))
            && (0..n).all(|u| {
                (0..n).all(|v| at(&adj_a, (u, v)) == at(&adj_b, (perm[u], perm[v])))
            });
        if ok {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// All loopless digraphs on exactly `n <= 4` nodes, one representative per
/// isomorphism class, found by minimizing the adjacency bitmask over all node
/// permutations.
pub fn digraph_class_representatives(n: usize) -> Vec<DirectedMultigraph> {
    assert!((1..=4).contains(&n));
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let perms = all_permutations(n);
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut canonical = u32::MAX;
        for perm in &perms {
            let mut image = 0u32;
            for (bit, &(i, j)) in pairs.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    let (pi, pj) = (perm[i], perm[j]);
                    let target = pairs
                        .iter()
                        .position(|&p| p == (pi, pj))
                        .expect("pair exists");
                    image |= 1 << target;
                }
            }
            canonical = canonical.min(image);
        }
        if seen.insert(canonical) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(bit, _)| canonical & (1 << bit) != 0)
                .map(|(_, &p)| p)
                .collect();
            reps.push(DirectedMultigraph::from_edges(n, &edges, true).unwrap());
        }
    }
    reps
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![perm.clone()];
    while next_permutation(&mut perm) {
        out.push(perm.clone());
    }
    out
}

/// Relabels a graph by a node permutation: node u becomes perm[u].
pub fn relabel(g: &DirectedMultigraph, perm: &[usize]) -> DirectedMultigraph {
    use fibra_core::graph::{Edge, NodeAttributes};
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .map(|e| Edge {
            src: NodeId(perm[e.src.0]),
            dst: NodeId(perm[e.dst.0]),
            ty: e.ty,
            weight: e.weight,
        })
        .collect();
    let mut labels = vec![None; g.node_count()];
    let mut features = vec![None; g.node_count()];
    for u in g.nodes() {
        labels[perm[u.0]] = g.label(u).map(str::to_string);
        features[perm[u.0]] = g.node_features(u).map(<[f64]>::to_vec);
    }
    let has_labels = labels.iter().any(Option::is_some);
    let has_features = features.iter().any(Option::is_some);
    DirectedMultigraph::build(
        g.node_count(),
        edges,
        Some(NodeAttributes {
            labels: if has_labels { labels } else { Vec::new() },
            features: if has_features { features } else { Vec::new() },
        }),
        true,
    )
    .unwrap()
}

/// Tricyclo[5.1.0.0^3,5]octane: 8 carbons, 12 hydrogens, undirected single
/// bonds, atom labels on.
pub fn tricyclooctane() -> DirectedMultigraph {
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
