#![allow(dead_code)]

use iaas_core::preference::synth::ModelSpec;
use iaas_core::preference::{
    assign_ranks, induce_graph, AggregationRule, RankedOutcomeSet, TempCpNet,
};
use iaas_core::request::{generate_workload, Distribution, Request, WorkloadSpec};
use iaas_core::{IndexedTempCpNet, RequestSet};

pub fn desk_net(levels: usize, seed: u64) -> IndexedTempCpNet {
    IndexedTempCpNet::build(ModelSpec::desk(levels).generate(seed)).unwrap()
}

pub fn desk_set(distribution: Distribution, n: usize, seed: u64) -> RequestSet {
    generate_workload(&WorkloadSpec::desk(distribution, n, seed)).unwrap()
}

/// Ranks of every interval and decision assignment, computed straight from
/// the induced graphs.
pub struct ScanOracle {
    model: TempCpNet,
    ranked: Vec<Vec<RankedOutcomeSet>>,
}

impl ScanOracle {
    pub fn new(model: &TempCpNet) -> Self {
        let ranked = model
            .intervals()
            .iter()
            .map(|iv| {
                (0..iv.net.decision_assignments())
                    .map(|d| assign_ranks(&induce_graph(&iv.net, d)).unwrap())
                    .collect()
            })
            .collect();
        Self {
            model: model.clone(),
            ranked,
        }
    }

    /// Total rank of `selection` recomputed from the raw requests: each
    /// interval's segments are prorated or peaked by hand, combined by rule,
    /// mapped to levels and ranked by a linear scan.
    pub fn global_rank(&self, set: &RequestSet, selection: &[usize]) -> Option<u64> {
        if selection.is_empty() {
            return Some(0);
        }
        let attrs: Vec<usize> = self
            .model
            .attribute_names()
            .iter()
            .map(|a| set.attributes().iter().position(|b| b == a).unwrap())
            .collect();
        let rules = self.model.rules();
        let decisions = self.model.decisions().len();
        let mut total = 0;
        for (k, iv) in self.model.intervals().iter().enumerate() {
            let mut values = vec![0.0; attrs.len()];
            let mut long = false;
            for &i in selection {
                let r: &Request = &set.requests()[i];
                let (lo, hi) = (r.start.max(iv.start), (r.start + r.length).min(iv.end));
                if lo >= hi {
                    continue;
                }
                long |= r.start + r.length > iv.end;
                for (slot, &src) in attrs.iter().enumerate() {
                    let series = &r.series[src];
                    let v = if r.temporal[src] {
                        series.iter().sum::<f64>() * f64::from(hi - lo) / f64::from(r.length)
                    } else {
                        let a = (lo - r.start) as usize;
                        let b = (hi - r.start) as usize;
                        series[a..b].iter().cloned().fold(f64::MIN, f64::max)
                    };
                    values[slot] = match rules[slot] {
                        AggregationRule::Sum => values[slot] + v,
                        AggregationRule::Max => f64::max(values[slot], v),
                    };
                }
            }
            let mut config = Vec::new();
            for (slot, &v) in values.iter().enumerate() {
                let b = iv.table.scale(slot).bounds();
                let last = b.len() - 2;
                let level = (0..=last)
                    .find(|&l| v >= b[l] && (v < b[l + 1] || (l == last && v <= b[l + 1])))?;
                config.push(level);
            }
            let d = if long { (1usize << decisions) - 1 } else { 0 };
            total += u64::from(self.ranked[k][d].scan_rank(&config)?);
        }
        Some(total)
    }

    /// Minimum total rank over every non-empty subset, 0 when none is feasible.
    pub fn best(&self, set: &RequestSet) -> u64 {
        let n = set.len();
        (1u64..1 << n)
            .filter_map(|mask| {
                let sel: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                self.global_rank(set, &sel)
            })
            .min()
            .unwrap_or(0)
    }
}
