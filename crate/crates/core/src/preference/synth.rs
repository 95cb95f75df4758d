//! Random TempCP-net synthesis for experiments: random dependency DAGs,
//! random CPT preorders and jittered semantic boundaries per interval.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cpnet::{CpNet, Cpt, Parent};
use super::model::{AggregationRule, AttributeDecl, Interval, TempCpNet};
use super::semantic::{AttributeScale, SemanticTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthAttribute {
    pub name: String,
    pub rule: AggregationRule,
    /// Boundaries of the reference scale; inner boundaries are jittered per interval.
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub intervals: usize,
    pub interval_len: u32,
    pub attributes: Vec<SynthAttribute>,
    pub decision: bool,
    pub max_parents: usize,
    pub tie_probability: f64,
    /// Relative jitter applied to inner boundaries, as a fraction of the local gap.
    pub jitter: f64,
}

impl ModelSpec {
    /// Desk-scale defaults: quarterly intervals over a 12-month horizon,
    /// CPU / availability / price with four levels each.
    pub fn desk(levels: usize) -> Self {
        let even = |hi: f64| -> Vec<f64> {
            (0..=levels)
                .map(|i| hi * i as f64 / levels as f64)
                .collect()
        };
        let availability = {
            // resolution concentrated near the top of the scale
            let mut b = vec![0.0];
            let tail = [90.0, 95.0, 97.0, 98.0, 99.0, 99.5, 99.9];
            let take = levels - 1;
            let step = tail.len() as f64 / take as f64;
            for i in 0..take {
                b.push(tail[((i as f64) * step) as usize]);
            }
            b.push(100.0);
            b
        };
        ModelSpec {
            intervals: 4,
            interval_len: 3,
            attributes: vec![
                SynthAttribute {
                    name: "cpu".into(),
                    rule: AggregationRule::Sum,
                    bounds: even(100.0),
                },
                SynthAttribute {
                    name: "availability".into(),
                    rule: AggregationRule::Max,
                    bounds: availability,
                },
                SynthAttribute {
                    name: "price".into(),
                    rule: AggregationRule::Sum,
                    bounds: even(3000.0),
                },
            ],
            decision: true,
            max_parents: 2,
            tie_probability: 0.15,
            jitter: 0.2,
        }
    }

    pub fn generate(&self, seed: u64) -> TempCpNet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names: Vec<String> = self.attributes.iter().map(|a| a.name.clone()).collect();
        let decisions: Vec<String> = if self.decision {
            vec!["N".into()]
        } else {
            Vec::new()
        };
        let mut intervals = Vec::with_capacity(self.intervals);
        for k in 0..self.intervals {
            let scales: Vec<AttributeScale> = self
                .attributes
                .iter()
                .map(|a| jittered_scale(&mut rng, a, self.jitter))
                .collect();
            let radices: Vec<usize> = scales.iter().map(AttributeScale::level_count).collect();
            let cpts = random_cpts(
                &mut rng,
                &radices,
                self.decision,
                self.max_parents,
                self.tie_probability,
            );
            let net = CpNet::new(names.clone(), radices, decisions.clone(), cpts)
                .expect("generated CP-nets are acyclic by construction");
            let start = k as u32 * self.interval_len;
            intervals.push(Interval {
                name: format!("I{}", k + 1),
                start,
                end: start + self.interval_len,
                net,
                table: SemanticTable::new(names.clone(), scales),
            });
        }
        let attributes = self
            .attributes
            .iter()
            .map(|a| AttributeDecl {
                name: a.name.clone(),
                rule: a.rule,
            })
            .collect();
        TempCpNet::new(attributes, decisions, intervals).expect("generated model is valid")
    }
}

fn jittered_scale(rng: &mut ChaCha8Rng, attr: &SynthAttribute, jitter: f64) -> AttributeScale {
    let mut bounds = attr.bounds.clone();
    let n = bounds.len();
    for (i, b) in bounds.iter_mut().enumerate().take(n - 1).skip(1) {
        let gap = (attr.bounds[i + 1] - attr.bounds[i - 1]) / 2.0;
        *b = attr.bounds[i] + rng.random_range(-jitter..=jitter) * gap * 0.5;
    }
    let levels = (1..n).map(|i| format!("{}{}", attr.name, i)).collect();
    AttributeScale::new(levels, bounds).expect("jitter keeps boundaries ordered")
}

fn random_cpts(
    rng: &mut ChaCha8Rng,
    radices: &[usize],
    decision: bool,
    max_parents: usize,
    tie_probability: f64,
) -> Vec<Cpt> {
    let n = radices.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let decision_child = decision.then(|| rng.random_range(0..n));
    let mut cpts: Vec<Option<Cpt>> = vec![None; n];
    for (pos, &x) in order.iter().enumerate() {
        let mut parents = Vec::new();
        for &earlier in &order[..pos] {
            if parents.len() < max_parents && rng.random_bool(0.5) {
                parents.push(Parent::Attribute(earlier));
            }
        }
        if decision_child == Some(x) {
            parents.push(Parent::Decision(0));
        }
        let parent_radices: Vec<usize> = parents
            .iter()
            .map(|p| match *p {
                Parent::Attribute(a) => radices[a],
                Parent::Decision(_) => 2,
            })
            .collect();
        let rows = (0..parent_radices.iter().product::<usize>())
            .map(|_| random_preorder(rng, radices[x], tie_probability))
            .collect();
        cpts[x] = Some(Cpt::new(parents, parent_radices, rows).expect("row count matches"));
    }
    cpts.into_iter().map(Option::unwrap).collect()
}

fn random_preorder(rng: &mut ChaCha8Rng, levels: usize, tie_probability: f64) -> Vec<u8> {
    let mut perm: Vec<usize> = (0..levels).collect();
    perm.shuffle(rng);
    let mut tiers = vec![0u8; levels];
    let mut tier = 0u8;
    for (i, &l) in perm.iter().enumerate() {
        if i > 0 && !rng.random_bool(tie_probability) {
            tier += 1;
        }
        tiers[l] = tier;
    }
    tiers
}
