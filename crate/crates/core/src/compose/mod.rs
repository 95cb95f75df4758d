//! Composers selecting the subset of requests with the best total rank.

mod exact;
#[cfg(test)]
pub(crate) mod fixtures;
mod heuristic;
mod learn;
mod problem;

pub use exact::{brute_force, dp_compose, ORACLE_CAP};
pub use heuristic::{heuristic_compose, VisitOrder};
pub use learn::{
    extract_policy, learn, q2d_compose, q3d_compose, sarsa_compose, LearnParams, Learner, Mode,
    QCube, QRow, ReuseGuide,
};
pub use problem::{Bits, CompositionProblem, EpisodeState, IntervalActions, MAX_CANDIDATES};

use serde::{Deserialize, Serialize};

/// One interval decision in a sequential composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub order: usize,
    pub interval: usize,
    /// Final configuration of the interval as a mask over its candidates.
    pub action: u64,
    /// Requests accepted by this step.
    pub accepted: Vec<usize>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    /// Accepted request indexes, ascending.
    pub accepted: Vec<usize>,
    pub accepted_ids: Vec<String>,
    /// Total rank of the accepted set; 0 for the empty composition.
    pub rank: u64,
    pub trace: Vec<TraceStep>,
    /// Learning episodes run, for learned composers.
    pub episodes: usize,
    /// Distinct table entries updated during learning.
    pub visited: usize,
}

impl Composition {
    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Interval visit sequence of the trace.
    pub fn sequence(&self) -> Vec<usize> {
        self.trace.iter().map(|t| t.interval).collect()
    }
}
