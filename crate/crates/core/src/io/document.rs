//! Graph documents: the JSON schema and whitespace edge lists.
//!
//! JSON schema:
//! ```json
//! {
//!   "directed": true,
//!   "nodes": [{"id": 0, "label": "C", "features": [1.0]}],
//!   "edges": [{"src": 0, "dst": 1, "type": 0, "weight": 1.0}]
//! }
//! ```
//! `type` defaults to 0 and `weight` to 1.0. Node ids may be sparse; they are
//! densified on load and the remapping is reported. In strict mode unknown
//! keys are rejected. Edge-list text files hold one `src dst [type] [weight]`
//! record per line with `#` comments; they always load as directed graphs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IoError;
use crate::fibration::{BaseGraph, Coloring};
use crate::graph::{DirectedMultigraph, Edge, EdgeTypeId, NodeAttributes, NodeId};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub src: u64,
    pub dst: u64,
    #[serde(default, rename = "type")]
    pub ty: u32,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphDocument {
    pub directed: bool,
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

/// A loaded graph plus the id remapping applied during densification
/// (`id_map[dense_index] = original id`), when one was needed.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: DirectedMultigraph,
    pub id_map: Option<Vec<u64>>,
}

fn check_keys(
    path: &str,
    value: &Value,
    location: &'static str,
    allowed: &[&str],
) -> Result<(), IoError> {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(IoError::UnknownKey {
                    path: path.to_string(),
                    location,
                    key: key.clone(),
                });
            }
        }
    }
    Ok(())
}

impl GraphDocument {
    /// Parses a document from JSON text. Strict mode rejects unknown keys.
    pub fn parse(text: &str, strict: bool, path: &str) -> Result<Self, IoError> {
        let value: Value = serde_json::from_str(text).map_err(|e| IoError::Json {
            path: path.to_string(),
            detail: e.to_string(),
        })?;
        if strict {
            check_keys(path, &value, "document", &["directed", "nodes", "edges"])?;
            if let Some(nodes) = value.get("nodes").and_then(Value::as_array) {
                for n in nodes {
                    check_keys(path, n, "node", &["id", "label", "features"])?;
                }
            }
            if let Some(edges) = value.get("edges").and_then(Value::as_array) {
                for e in edges {
                    check_keys(path, e, "edge", &["src", "dst", "type", "weight"])?;
                }
            }
        }
        serde_json::from_value(value).map_err(|e| IoError::Json {
            path: path.to_string(),
            detail: e.to_string(),
        })
    }

    /// Validates and builds the graph, densifying sparse node ids.
    pub fn to_graph(&self, path: &str) -> Result<LoadedGraph, IoError> {
        let doc_err = |detail: String| IoError::Document {
            path: path.to_string(),
            detail,
        };

        let (node_count, id_map, dense): (usize, Option<Vec<u64>>, BTreeMap<u64, usize>) =
            if self.nodes.is_empty() {
                // No node list: ids are taken as already dense.
                let max = self
                    .edges
                    .iter()
                    .flat_map(|e| [e.src, e.dst])
                    .max()
                    .map_or(0, |m| m + 1);
                (max as usize, None, BTreeMap::new())
            } else {
                let mut ids: Vec<u64> = self.nodes.iter().map(|n| n.id).collect();
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(doc_err("duplicate node id".into()));
                }
                let already_dense = ids
                    .iter()
                    .enumerate()
                    .all(|(i, &id)| id == i as u64);
                if already_dense {
                    (ids.len(), None, BTreeMap::new())
                } else {
                    let dense: BTreeMap<u64, usize> =
                        ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
                    (ids.len(), Some(ids), dense)
                }
            };

        let map_id = |raw: u64, index: usize| -> Result<usize, IoError> {
            if id_map.is_none() {
                let v = raw as usize;
                if v >= node_count {
                    return Err(doc_err(format!(
                        "edge {index} references unknown node id {raw}"
                    )));
                }
                return Ok(v);
            }
            dense
                .get(&raw)
                .copied()
                .ok_or_else(|| doc_err(format!("edge {index} references unknown node id {raw}")))
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for (index, e) in self.edges.iter().enumerate() {
            edges.push(Edge {
                src: NodeId(map_id(e.src, index)?),
                dst: NodeId(map_id(e.dst, index)?),
                ty: EdgeTypeId(e.ty),
                weight: e.weight,
            });
        }

        let mut labels = vec![None; node_count];
        let mut features = vec![None; node_count];
        let mut any_label = false;
        let mut any_feature = false;
        for n in &self.nodes {
            let idx = match &id_map {
                None => n.id as usize,
                Some(_) => dense[&n.id],
            };
            if n.label.is_some() {
                any_label = true;
            }
            if n.features.is_some() {
                any_feature = true;
            }
            labels[idx] = n.label.clone();
            features[idx] = n.features.clone();
        }
        let attrs = NodeAttributes {
            labels: if any_label { labels } else { Vec::new() },
            features: if any_feature { features } else { Vec::new() },
        };

        let graph = DirectedMultigraph::build(node_count, edges, Some(attrs), self.directed)?;
        Ok(LoadedGraph { graph, id_map })
    }

    /// Document for a graph. Undirected graphs emit each stored edge pair
    /// once (the `src <= dst` half), so a reload reconstructs the closure
    /// with identical multiplicities.
    pub fn from_graph(g: &DirectedMultigraph) -> Self {
        let nodes = g
            .nodes()
            .map(|u| NodeDoc {
                id: u.0 as u64,
                label: g.label(u).map(str::to_string),
                features: g.node_features(u).map(<[f64]>::to_vec),
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .filter(|e| g.is_directed() || e.src.0 <= e.dst.0)
            .map(|e| EdgeDoc {
                src: e.src.0 as u64,
                dst: e.dst.0 as u64,
                ty: e.ty.0,
                weight: e.weight,
            })
            .collect();
        GraphDocument {
            directed: g.is_directed(),
            nodes,
            edges,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Parses `src dst [type] [weight]` lines; `#` starts a comment. The node
/// count is one past the highest id. Always directed.
pub fn parse_edge_list(text: &str, path: &str) -> Result<DirectedMultigraph, IoError> {
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |detail: String| IoError::EdgeList {
            path: path.to_string(),
            line: lineno + 1,
            detail,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 4 {
            return Err(err(format!(
                "expected \"src dst [type] [weight]\", found {} fields",
                fields.len()
            )));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad source id {:?}", fields[0])))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad target id {:?}", fields[1])))?;
        let ty: u32 = match fields.get(2) {
            Some(f) => f
                .parse()
                .map_err(|_| err(format!("bad edge type {f:?}")))?,
            None => 0,
        };
        let weight: f64 = match fields.get(3) {
            Some(f) => f
                .parse()
                .map_err(|_| err(format!("bad weight {f:?}")))?,
            None => 1.0,
        };
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push(Edge::typed(src, dst, ty, weight));
    }
    let node_count = max_id.map_or(0, |m| m + 1);
    Ok(DirectedMultigraph::build(node_count, edges, None, true)?)
}

/// Loads a graph from a file, sniffing JSON (leading `{`) vs edge-list text.
pub fn load_graph(path: &Path) -> Result<LoadedGraph, IoError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: display.clone(),
        source,
    })?;
    if text.trim_start().starts_with('{') {
        GraphDocument::parse(&text, true, &display)?.to_graph(&display)
    } else {
        Ok(LoadedGraph {
            graph: parse_edge_list(&text, &display)?,
            id_map: None,
        })
    }
}

/// Writes a graph as a JSON document.
pub fn save_graph(g: &DirectedMultigraph, path: &Path) -> Result<(), IoError> {
    let doc = GraphDocument::from_graph(g);
    fs::write(path, doc.to_json_pretty()).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Result document of a coloring run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColoringDocument {
    pub class_count: usize,
    pub assignment: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
}

impl ColoringDocument {
    pub fn from_coloring(c: &Coloring) -> Self {
        ColoringDocument {
            class_count: c.class_count(),
            assignment: c.assignment().to_vec(),
            classes: c
                .classes()
                .iter()
                .map(|class| class.iter().map(|u| u.0).collect())
                .collect(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Result document of a base construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseDocument {
    pub base: GraphDocument,
    pub fiber_map: Vec<usize>,
    pub fiber_sizes: Vec<usize>,
    pub compression_factor: f64,
}

impl BaseDocument {
    pub fn from_base(b: &BaseGraph) -> Self {
        BaseDocument {
            base: GraphDocument::from_graph(b.base()),
            fiber_map: b.fiber_map().to_vec(),
            fiber_sizes: b.fiber_members().iter().map(Vec::len).collect(),
            compression_factor: b.compression_factor(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}
