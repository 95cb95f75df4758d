//! Request annotation: singleton global rank and overlap ratio per request.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::IndexedTempCpNet;
use crate::request::{overlap_ratio, RequestSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// Global rank of each request accepted alone.
    pub gpr: Vec<f64>,
    /// Fraction of intervals each request occupies.
    pub overlap: Vec<f64>,
    /// Requests infeasible on their own; their `gpr` is the worst feasible
    /// rank plus one.
    pub infeasible: Vec<bool>,
    pub gpr_range: (f64, f64),
    pub overlap_range: (f64, f64),
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn normalize(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

impl Annotation {
    pub fn len(&self) -> usize {
        self.gpr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gpr.is_empty()
    }

    /// Min-max normalized `(gpr, overlap)` coordinates.
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.gpr
            .iter()
            .zip(&self.overlap)
            .map(|(&g, &o)| {
                [
                    normalize(g, self.gpr_range),
                    normalize(o, self.overlap_range),
                ]
            })
            .collect()
    }

    /// Builds an annotation from raw coordinates.
    pub fn from_raw(gpr: Vec<f64>, overlap: Vec<f64>, infeasible: Vec<bool>) -> Self {
        Self {
            gpr_range: range(&gpr),
            overlap_range: range(&overlap),
            gpr,
            overlap,
            infeasible,
        }
    }
}

pub fn annotate_set(set: &RequestSet, net: &IndexedTempCpNet) -> Result<Annotation> {
    if set.is_empty() {
        return Err(Error::EmptyRequestSet);
    }
    let segmented = set.segment_all(net.model())?;
    let ranks: Vec<Option<u64>> = segmented.iter().map(|s| net.global_rank(&[s])).collect();
    let worst = ranks.iter().flatten().copied().max().unwrap_or(0);
    let gpr = ranks
        .iter()
        .map(|r| r.unwrap_or(worst + 1) as f64)
        .collect();
    let infeasible = ranks.iter().map(Option::is_none).collect();
    let m = net.interval_count();
    let overlap = segmented.iter().map(|s| overlap_ratio(s, m)).collect();
    Ok(Annotation::from_raw(gpr, overlap, infeasible))
}
