//! Induced preference graphs and the ranks derived from them.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::cpnet::CpNet;
use crate::error::{Error, Result};

/// Directed graph over all outcomes of a CP-net for one decision assignment.
/// Edges point from the worse outcome to the better one and connect only
/// outcomes that differ in a single attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedGraph {
    radices: Vec<usize>,
    decision: u32,
    succ: Vec<Vec<u32>>,
}

/// Result of a dominance query between two outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    FirstPreferred,
    SecondPreferred,
    IndifferentOrIncomparable,
}

impl Comparison {
    pub fn flip(self) -> Self {
        match self {
            Comparison::FirstPreferred => Comparison::SecondPreferred,
            Comparison::SecondPreferred => Comparison::FirstPreferred,
            Comparison::IndifferentOrIncomparable => Comparison::IndifferentOrIncomparable,
        }
    }
}

/// Builds the induced graph by flipping each attribute of each outcome and
/// consulting the CPT row selected by the outcome's parent values.
pub fn induce_graph(net: &CpNet, decision: u32) -> InducedGraph {
    let radices = net.radices().to_vec();
    let n = net.outcome_count();
    let mut succ = vec![Vec::new(); n];
    let strides = strides(&radices);
    for (idx, edges) in succ.iter_mut().enumerate() {
        let outcome = net.outcome_at(idx);
        for (x, cpt) in net.cpts().iter().enumerate() {
            let row = cpt.row_for(&outcome, decision);
            let current = outcome[x];
            for other in 0..radices[x] {
                if row[other] < row[current] {
                    let target = idx - current * strides[x] + other * strides[x];
                    edges.push(target as u32);
                }
            }
        }
    }
    InducedGraph {
        radices,
        decision,
        succ,
    }
}

fn strides(radices: &[usize]) -> Vec<usize> {
    let mut s = vec![1; radices.len()];
    for i in (0..radices.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * radices[i + 1];
    }
    s
}

impl InducedGraph {
    /// Graph from explicit edges; used for synthetic structures in tests.
    pub fn from_edges(radices: Vec<usize>, decision: u32, edges: &[(usize, usize)]) -> Self {
        let n = radices.iter().product();
        let mut succ = vec![Vec::new(); n];
        for &(from, to) in edges {
            succ[from].push(to as u32);
        }
        Self {
            radices,
            decision,
            succ,
        }
    }

    pub fn node_count(&self) -> usize {
        self.succ.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn decision(&self) -> u32 {
        self.decision
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Outgoing (worse to better) edges of a node.
    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.succ[node].iter().map(|&v| v as usize)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&(to as u32))
    }

    pub fn index_of(&self, outcome: &[usize]) -> Option<usize> {
        if outcome.len() != self.radices.len() {
            return None;
        }
        let mut idx = 0;
        for (&v, &r) in outcome.iter().zip(&self.radices) {
            if v >= r {
                return None;
            }
            idx = idx * r + v;
        }
        Some(idx)
    }

    pub fn outcome_at(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        out
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return false;
        }
        let mut seen = vec![false; self.succ.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            for w in self.successors(v) {
                if w == to {
                    return true;
                }
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Dominance query: an outcome is preferred when the other reaches it.
    pub fn compare(&self, o1: &[usize], o2: &[usize]) -> Result<Comparison> {
        let a = self
            .index_of(o1)
            .ok_or_else(|| Error::UnknownOutcome(o1.to_vec()))?;
        let b = self
            .index_of(o2)
            .ok_or_else(|| Error::UnknownOutcome(o2.to_vec()))?;
        Ok(if self.reaches(b, a) {
            Comparison::FirstPreferred
        } else if self.reaches(a, b) {
            Comparison::SecondPreferred
        } else {
            Comparison::IndifferentOrIncomparable
        })
    }

    /// True when a topological order exists.
    pub fn is_acyclic(&self) -> bool {
        self.heights().is_some()
    }

    /// Longest path length from each node to a sink, or `None` on a cycle.
    fn heights(&self) -> Option<Vec<u32>> {
        let n = self.succ.len();
        let mut outdeg: Vec<usize> = self.succ.iter().map(Vec::len).collect();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (v, out) in self.succ.iter().enumerate() {
            for &w in out {
                preds[w as usize].push(v as u32);
            }
        }
        let mut height = vec![0u32; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| outdeg[v] == 0).collect();
        let mut done = 0;
        while let Some(v) = queue.pop_front() {
            done += 1;
            for &p in &preds[v] {
                let p = p as usize;
                height[p] = height[p].max(height[v] + 1);
                outdeg[p] -= 1;
                if outdeg[p] == 0 {
                    queue.push_back(p);
                }
            }
        }
        (done == n).then_some(height)
    }
}

/// Integer preference ranks of every outcome (1 = most preferred).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOutcomeSet {
    radices: Vec<usize>,
    decision: u32,
    ranks: Vec<u32>,
    max_rank: u32,
}

/// rank = 1 + longest path to a sink, compressed onto `1..=q`.
pub fn assign_ranks(graph: &InducedGraph) -> Result<RankedOutcomeSet> {
    let heights = graph.heights().ok_or(Error::Cyclic)?;
    let mut distinct: Vec<u32> = heights.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let ranks: Vec<u32> = heights
        .iter()
        .map(|h| distinct.binary_search(h).unwrap() as u32 + 1)
        .collect();
    Ok(RankedOutcomeSet {
        radices: graph.radices.clone(),
        decision: graph.decision,
        max_rank: distinct.len() as u32,
        ranks,
    })
}

impl RankedOutcomeSet {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn decision(&self) -> u32 {
        self.decision
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Number of distinct ranks `q`.
    pub fn max_rank(&self) -> u32 {
        self.max_rank
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn outcome_at(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        out
    }

    /// All (outcome, rank) pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, u32)> + '_ {
        self.ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| (self.outcome_at(i), r))
    }

    /// Rank by linear scan over the outcome list.
    pub fn scan_rank(&self, outcome: &[usize]) -> Option<u32> {
        self.iter().find(|(o, _)| o == outcome).map(|(_, r)| r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::cpnet::{Cpt, Parent};

    fn chain_graph(n: usize) -> InducedGraph {
        // 0 -> 1 -> 2 -> ... ; node n-1 is the sink
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        InducedGraph::from_edges(vec![n], 0, &edges)
    }

    #[test]
    fn chain_of_four_ranks_by_distance_to_sink() {
        let ranked = assign_ranks(&chain_graph(4)).unwrap();
        assert_eq!(ranked.ranks(), &[4, 3, 2, 1]);
        assert_eq!(ranked.max_rank(), 4);
    }

    #[test]
    fn sink_is_rank_one() {
        let g = InducedGraph::from_edges(vec![3], 0, &[(0, 2), (1, 2)]);
        let ranked = assign_ranks(&g).unwrap();
        assert_eq!(ranked.ranks()[2], 1);
        assert_eq!(ranked.ranks()[0], 2);
        assert_eq!(ranked.ranks()[1], 2);
    }

    #[test]
    fn cycle_is_rejected() {
        let g = InducedGraph::from_edges(vec![3], 0, &[(0, 1), (1, 2), (2, 0)]);
        assert!(matches!(assign_ranks(&g), Err(Error::Cyclic)));
        assert!(!g.is_acyclic());
    }

    #[test]
    fn single_attribute_order_yields_single_edge() {
        let net = CpNet::new(
            vec!["x".into()],
            vec![2],
            vec![],
            vec![Cpt::unconditional(vec![0, 1])],
        )
        .unwrap();
        let g = induce_graph(&net, 0);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn tie_produces_no_edge_and_shared_rank() {
        let net = CpNet::new(
            vec!["x".into()],
            vec![3],
            vec![],
            vec![Cpt::unconditional(vec![0, 0, 1])],
        )
        .unwrap();
        let g = induce_graph(&net, 0);
        assert_eq!(g.edge_count(), 2);
        let r = assign_ranks(&g).unwrap();
        assert_eq!(r.ranks(), &[1, 1, 2]);
    }

    #[test]
    fn comparison_is_antisymmetric_and_reflexive_indifferent() {
        let g = chain_graph(3);
        assert_eq!(g.compare(&[0], &[2]).unwrap(), Comparison::SecondPreferred);
        assert_eq!(g.compare(&[2], &[0]).unwrap(), Comparison::FirstPreferred);
        assert_eq!(
            g.compare(&[1], &[1]).unwrap(),
            Comparison::IndifferentOrIncomparable
        );
        assert!(matches!(
            g.compare(&[5], &[0]),
            Err(Error::UnknownOutcome(_))
        ));
    }

    #[test]
    fn decision_parent_switches_rows() {
        // x prefers level 0 when N=F and level 1 when N=T.
        let cpt = Cpt::new(
            vec![Parent::Decision(0)],
            vec![2],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        let net = CpNet::new(vec!["x".into()], vec![2], vec!["N".into()], vec![cpt]).unwrap();
        assert!(induce_graph(&net, 0).has_edge(1, 0));
        assert!(induce_graph(&net, 1).has_edge(0, 1));
    }
}
