//! Synthetic request workloads: length distributions over duration buckets,
//! Poisson arrivals and uniformly drawn attribute values.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use super::{Request, RequestSet, WorkloadMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    RightSkewed,
    LeftSkewed,
    Random,
}

impl Distribution {
    pub const ALL: [Distribution; 4] = [
        Distribution::Normal,
        Distribution::RightSkewed,
        Distribution::LeftSkewed,
        Distribution::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::RightSkewed => "right_skewed",
            Distribution::LeftSkewed => "left_skewed",
            Distribution::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "normal" => Some(Distribution::Normal),
            "right_skewed" | "right" => Some(Distribution::RightSkewed),
            "left_skewed" | "left" => Some(Distribution::LeftSkewed),
            "random" => Some(Distribution::Random),
            _ => None,
        }
    }

    /// Short / medium / long percentages; `None` for the random mix.
    pub fn percentages(self) -> Option<[u32; 3]> {
        match self {
            Distribution::Normal => Some([20, 60, 20]),
            Distribution::RightSkewed => Some([20, 20, 60]),
            Distribution::LeftSkewed => Some([60, 20, 20]),
            Distribution::Random => None,
        }
    }
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Request lengths drawn uniformly from `[min, max]` time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// Per-time-unit value of a divisible attribute such as price.
    #[serde(default)]
    pub temporal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub distribution: Distribution,
    pub count: usize,
    pub horizon: u32,
    pub seed: u64,
    /// Short, medium and long buckets.
    pub buckets: [LengthBucket; 3],
    pub attributes: Vec<AttributeRange>,
}

impl WorkloadSpec {
    /// Twelve-month horizon with 1-3 / 4-8 / 9-12 month buckets and the
    /// cpu / availability / price attributes of the desk model.
    pub fn desk(distribution: Distribution, count: usize, seed: u64) -> Self {
        Self {
            distribution,
            count,
            horizon: 12,
            seed,
            buckets: [
                LengthBucket { min: 1, max: 3 },
                LengthBucket { min: 4, max: 8 },
                LengthBucket { min: 9, max: 12 },
            ],
            attributes: vec![
                AttributeRange {
                    name: "cpu".into(),
                    min: 5.0,
                    max: 40.0,
                    temporal: false,
                },
                AttributeRange {
                    name: "availability".into(),
                    min: 90.0,
                    max: 100.0,
                    temporal: false,
                },
                AttributeRange {
                    name: "price".into(),
                    min: 50.0,
                    max: 200.0,
                    temporal: true,
                },
            ],
        }
    }

    /// Same spec over a horizon of `horizon` units, with length buckets
    /// clipped to it.
    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        for b in self.buckets.iter_mut() {
            b.max = b.max.min(horizon);
            b.min = b.min.min(b.max);
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Workload(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("workload spec serializes")
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Workload(m));
        if self.count == 0 {
            return bad("count must be positive".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        for b in &self.buckets {
            if b.min == 0 || b.min > b.max || b.max > self.horizon {
                return bad(format!(
                    "length bucket [{}, {}] must satisfy 1 <= min <= max <= horizon {}",
                    b.min, b.max, self.horizon
                ));
            }
        }
        if self.attributes.is_empty() {
            return bad("at least one attribute range is required".into());
        }
        for a in &self.attributes {
            if !(a.min.is_finite() && a.max.is_finite()) || a.min > a.max || a.min < 0.0 {
                return bad(format!(
                    "attribute `{}` has an empty or negative range",
                    a.name
                ));
            }
        }
        Ok(())
    }
}

/// Splits `total` proportionally to `weights` by largest remainder; ties go
/// to the earlier entry.
pub(crate) fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Generates a request set; identical specs give identical sets.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<RequestSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let percents: Vec<f64> = match spec.distribution.percentages() {
        Some(p) => p.iter().map(|&v| f64::from(v)).collect(),
        None => {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            apportion(100, &w).into_iter().map(|v| v as f64).collect()
        }
    };
    let counts = apportion(spec.count, &percents);

    let mut lengths = Vec::with_capacity(spec.count);
    for (bucket, &n) in spec.buckets.iter().zip(&counts) {
        for _ in 0..n {
            lengths.push(rng.random_range(bucket.min..=bucket.max));
        }
    }
    lengths.shuffle(&mut rng);

    let gaps = Exp::new(spec.count as f64 / f64::from(spec.horizon)).expect("positive rate");
    let mut clock = 0.0;
    let mut drafts = Vec::with_capacity(spec.count);
    for length in lengths {
        clock += gaps.sample(&mut rng);
        let latest = spec.horizon - length;
        let mut start = clock.floor();
        if start > f64::from(latest) {
            // an arrival conditioned on the admissible window is uniform over it
            start = rng.random_range(0..=latest) as f64;
        }
        let values: Vec<f64> = spec
            .attributes
            .iter()
            .map(|a| {
                if a.min == a.max {
                    a.min
                } else {
                    rng.random_range(a.min..=a.max)
                }
            })
            .collect();
        drafts.push((start as u32, length, values));
    }
    drafts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let temporal: Vec<bool> = spec.attributes.iter().map(|a| a.temporal).collect();
    let requests = drafts
        .into_iter()
        .enumerate()
        .map(|(i, (start, length, values))| {
            Request::constant(format!("R{}", i + 1), start, length, &values, &temporal)
        })
        .collect();
    let names = spec.attributes.iter().map(|a| a.name.clone()).collect();
    Ok(RequestSet::new(names, requests)?.with_meta(WorkloadMeta {
        distribution: spec.distribution.as_str().into(),
        seed: spec.seed,
    }))
}
