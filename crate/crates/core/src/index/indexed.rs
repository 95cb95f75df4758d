//! A TempCP-net with one rank index per (interval, decision assignment).

use crate::error::{Error, Result};
use crate::preference::{assign_ranks, induce_graph, RankedOutcomeSet, TempCpNet};
use crate::request::{Aggregate, SegmentedRequest};

use super::RankIndex;

#[derive(Debug, Clone)]
struct IntervalIndexes {
    ranked: Vec<RankedOutcomeSet>,
    trees: Vec<RankIndex>,
    q: u32,
}

/// Immutable after build; queries need no synchronization.
#[derive(Debug, Clone)]
pub struct IndexedTempCpNet {
    model: TempCpNet,
    intervals: Vec<IntervalIndexes>,
    long_mask: u32,
}

impl IndexedTempCpNet {
    pub fn build(model: TempCpNet) -> Result<Self> {
        let mut intervals = Vec::with_capacity(model.interval_count());
        for iv in model.intervals() {
            let mut ranked = Vec::new();
            let mut trees = Vec::new();
            for d in 0..iv.net.decision_assignments() {
                let set = assign_ranks(&induce_graph(&iv.net, d))?;
                trees.push(RankIndex::build(&set)?);
                ranked.push(set);
            }
            let q = ranked
                .iter()
                .map(RankedOutcomeSet::max_rank)
                .max()
                .unwrap_or(1);
            intervals.push(IntervalIndexes { ranked, trees, q });
        }
        let long_mask = (1u32 << model.decisions().len()) - 1;
        Ok(Self {
            model,
            intervals,
            long_mask,
        })
    }

    pub fn model(&self) -> &TempCpNet {
        &self.model
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Decision assignment for a short- or long-term configuration: every
    /// decision variable follows the long-term flag.
    pub fn decision_for(&self, long_term: bool) -> u32 {
        if long_term {
            self.long_mask
        } else {
            0
        }
    }

    fn interval(&self, interval: usize) -> Result<&IntervalIndexes> {
        self.intervals
            .get(interval)
            .ok_or(Error::IntervalOutOfRange {
                index: interval,
                count: self.intervals.len(),
            })
    }

    /// Largest rank any configuration of the interval can receive.
    pub fn q(&self, interval: usize) -> u32 {
        self.intervals[interval].q
    }

    pub fn tree(&self, interval: usize, decision: u32) -> Result<&RankIndex> {
        self.interval(interval)?
            .trees
            .get(decision as usize)
            .ok_or_else(|| {
                Error::Hyperparameter(format!("decision assignment {decision} out of range"))
            })
    }

    pub fn ranked(&self, interval: usize, decision: u32) -> Result<&RankedOutcomeSet> {
        self.interval(interval)?
            .ranked
            .get(decision as usize)
            .ok_or_else(|| {
                Error::Hyperparameter(format!("decision assignment {decision} out of range"))
            })
    }

    /// Rank of a semantic configuration; `None` when it is not indexed.
    pub fn local_rank(
        &self,
        interval: usize,
        config: &[usize],
        decision: u32,
    ) -> Result<Option<u32>> {
        let tree = self.tree(interval, decision)?;
        if config.len() != tree.dims() {
            return Err(Error::Schema(format!(
                "configuration has {} attributes, index has {}",
                config.len(),
                tree.dims()
            )));
        }
        Ok(tree.lookup(config))
    }

    /// Rank of raw attribute values; values outside the semantic domain miss.
    pub fn rank_values(&self, interval: usize, values: &[f64], long_term: bool) -> Option<u32> {
        let iv = &self.model.intervals()[interval];
        let config = iv.table.map_all(values)?;
        self.intervals[interval].trees[self.decision_for(long_term) as usize].lookup(&config)
    }

    pub fn rank_aggregate(&self, interval: usize, agg: &Aggregate) -> Option<u32> {
        self.rank_values(interval, &agg.values, agg.long_term)
    }

    /// Aggregate of the selection's segments in one interval; the all-zero
    /// configuration when none is active.
    pub fn interval_aggregate(
        &self,
        interval: usize,
        selection: &[&SegmentedRequest],
    ) -> Aggregate {
        let rules = self.model.rules();
        let mut agg = Aggregate::empty(rules.len());
        for r in selection {
            if let Some(seg) = &r.segments[interval] {
                agg.add(seg, &rules);
            }
        }
        agg
    }

    /// Total rank of a selection summed over all intervals, or `None` when
    /// some interval's aggregate is unindexed. The empty selection has rank 0.
    pub fn global_rank(&self, selection: &[&SegmentedRequest]) -> Option<u64> {
        if selection.is_empty() {
            return Some(0);
        }
        let mut total = 0u64;
        for k in 0..self.intervals.len() {
            let agg = self.interval_aggregate(k, selection);
            total += u64::from(self.rank_aggregate(k, &agg)?);
        }
        Some(total)
    }
}
