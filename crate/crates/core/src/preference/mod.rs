//! Provider preference models: semantic tables, CP-nets, induced graphs and ranks.

mod cpnet;
mod graph;
mod model;
mod semantic;
pub mod synth;

pub use cpnet::{CpNet, Cpt, Parent};
pub use graph::{assign_ranks, induce_graph, Comparison, InducedGraph, RankedOutcomeSet};
pub use model::{AggregationRule, AttributeDecl, Interval, TempCpNet};
pub use semantic::{AttributeScale, SemanticTable};

/// Loads and validates a TempCP-net model document.
pub fn load_tempcp(document: &str) -> Result<TempCpNet, crate::error::ModelError> {
    TempCpNet::parse(document)
}
