//! Reference implementations the acceptance checks compare against. None of
//! them share code paths with the engine beyond model and request types.

use iaas_core::library::Linkage;
use iaas_core::preference::AggregationRule;
use iaas_core::request::Request;
use iaas_core::{RequestSet, TempCpNet};

/// Exact subset rank straight from the model: hand segmentation, rule
/// aggregation, level mapping and a linear scan of the induced graph ranks.
pub struct ScanOracle {
    model: TempCpNet,
    ranked: Vec<Vec<iaas_core::preference::RankedOutcomeSet>>,
}

impl ScanOracle {
    pub fn new(model: &TempCpNet) -> Self {
        use iaas_core::preference::{assign_ranks, induce_graph};
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

/// Agglomeration that recomputes every cluster distance from the leaf
/// distances at each step. Returns the cophenetic matrix and merge heights.
pub fn naive_linkage(points: &[[f64; 2]], linkage: Linkage) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = points.len();
    let d = |i: usize, j: usize| {
        ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt()
    };
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut coph = vec![vec![0.0; n]; n];
    let mut heights = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let pairs = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)));
                let dist = match linkage {
                    Linkage::Slink => pairs.map(|(i, j)| d(i, j)).fold(f64::INFINITY, f64::min),
                    Linkage::Clink => pairs.map(|(i, j)| d(i, j)).fold(0.0, f64::max),
                    Linkage::Upgma => {
                        pairs.map(|(i, j)| d(i, j)).sum::<f64>()
                            / (clusters[a].len() * clusters[b].len()) as f64
                    }
                };
                if dist < best.0 {
                    best = (dist, a, b);
                }
            }
        }
        let (h, a, b) = best;
        for &i in &clusters[a] {
            for &j in &clusters[b] {
                coph[i][j] = h;
                coph[j][i] = h;
            }
        }
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        heights.push(h);
    }
    (coph, heights)
}
