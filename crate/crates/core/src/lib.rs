//! Fibration symmetries for directed multigraphs.
//!
//! The crate detects fibration symmetries (balanced colorings), builds minimal
//! quotient bases, screens graph isomorphism with the fibration and WL tests,
//! runs message-passing layers on graphs and their bases with certified output
//! equivalence, and trains MLPs with fibration gradient descent (collapsing
//! synchronized hidden nodes during training).
//!
//! Module map:
//! - [`graph`]: the `DirectedMultigraph` everything else builds on.
//! - [`fibration`]: balanced colorings, base construction, input trees.
//! - [`isotest`]: fibration test, WL test, exact small-multigraph isomorphism.
//! - [`gnn`]: GC/GEC/GI/GA layers on graphs and bases, lifting, synchrony checks.
//! - [`mlp`]: MLP training, activity synchronization, node collapse, FB-GD.
//! - [`io`]: graph documents, edge lists, IDX datasets, generators, checkpoints.

pub mod fibration;
pub mod gnn;
pub mod graph;
mod hash;
pub mod io;
pub mod isotest;
pub mod mlp;

pub use fibration::{BaseGraph, Coloring, InputTree};
pub use graph::{DirectedMultigraph, Edge, EdgeTypeId, NodeId};
