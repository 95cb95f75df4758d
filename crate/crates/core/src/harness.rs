//! Experiment harness: composer dispatch, seeded grids over models,
//! workloads and composers, NP accuracy and CSV reports.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::{
    brute_force, dp_compose, heuristic_compose, learn, Composition, CompositionProblem,
    LearnParams, Learner, Mode, VisitOrder, ORACLE_CAP,
};
use crate::error::{Error, Result};
use crate::index::IndexedTempCpNet;
use crate::preference::synth::ModelSpec;
use crate::preference::TempCpNet;
use crate::request::{generate_workload, Distribution, WorkloadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposerKind {
    BruteForce,
    Dp,
    HeuristicLtr,
    HeuristicRtl,
    HeuristicRandom,
    Q2d,
    Sarsa,
    Q3dOff,
    Q3dOn,
}

impl ComposerKind {
    pub const ALL: [ComposerKind; 9] = [
        ComposerKind::BruteForce,
        ComposerKind::Dp,
        ComposerKind::HeuristicLtr,
        ComposerKind::HeuristicRtl,
        ComposerKind::HeuristicRandom,
        ComposerKind::Q2d,
        ComposerKind::Sarsa,
        ComposerKind::Q3dOff,
        ComposerKind::Q3dOn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComposerKind::BruteForce => "brute_force",
            ComposerKind::Dp => "dp",
            ComposerKind::HeuristicLtr => "heuristic_ltr",
            ComposerKind::HeuristicRtl => "heuristic_rtl",
            ComposerKind::HeuristicRandom => "heuristic_random",
            ComposerKind::Q2d => "q2d",
            ComposerKind::Sarsa => "sarsa",
            ComposerKind::Q3dOff => "q3d_off",
            ComposerKind::Q3dOn => "q3d_on",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    pub fn learner(self) -> Option<Learner> {
        match self {
            ComposerKind::Q2d => Some(Learner::Q2d),
            ComposerKind::Sarsa => Some(Learner::Sarsa),
            ComposerKind::Q3dOff => Some(Learner::Q3d(Mode::OffPolicy)),
            ComposerKind::Q3dOn => Some(Learner::Q3d(Mode::OnPolicy)),
            _ => None,
        }
    }
}

impl std::fmt::Display for ComposerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs one composer; `params.seed` also seeds the random visit order.
pub fn run_composer(
    problem: &CompositionProblem<'_>,
    kind: ComposerKind,
    params: &LearnParams,
    cap: usize,
) -> Result<Composition> {
    match kind {
        ComposerKind::BruteForce => brute_force(problem, cap),
        ComposerKind::Dp => dp_compose(problem, cap),
        ComposerKind::HeuristicLtr => Ok(heuristic_compose(problem, VisitOrder::LeftToRight)),
        ComposerKind::HeuristicRtl => Ok(heuristic_compose(problem, VisitOrder::RightToLeft)),
        ComposerKind::HeuristicRandom => Ok(heuristic_compose(
            problem,
            VisitOrder::Random { seed: params.seed },
        )),
        _ => {
            let learner = kind.learner().expect("remaining kinds learn");
            learn(problem, learner, params, None).map(|(c, _)| c)
        }
    }
}

/// Normalized preference `oracle / achieved`: 1 is optimal, smaller is
/// worse, and an empty composition scores 0. Undefined when the oracle
/// found nothing feasible.
pub fn np_metric(achieved: u64, oracle: u64) -> Option<f64> {
    if oracle == 0 {
        return None;
    }
    if achieved == 0 {
        return Some(0.0);
    }
    Some(oracle as f64 / achieved as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model documents; when empty, synthetic desk models are generated.
    pub models: Vec<PathBuf>,
    pub model_levels: usize,
    pub model_seeds: Vec<u64>,
    pub distributions: Vec<Distribution>,
    pub sizes: Vec<usize>,
    /// Seeds for workloads and learners.
    pub seeds: Vec<u64>,
    pub composers: Vec<ComposerKind>,
    pub alphas: Vec<f64>,
    pub gamma: f64,
    pub episodes: Option<usize>,
    /// Largest request count for which the exact oracle runs.
    pub oracle_cap: usize,
    /// Record wall-clock time per run; off keeps reports byte-reproducible.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            models: Vec::new(),
            model_levels: 4,
            model_seeds: vec![1],
            distributions: vec![Distribution::Normal],
            sizes: vec![10],
            seeds: vec![0],
            composers: vec![ComposerKind::Q3dOn],
            alphas: vec![0.5],
            gamma: 0.9,
            episodes: None,
            oracle_cap: ORACLE_CAP,
            timing: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.seeds.is_empty() {
            return bad("seed list must not be empty");
        }
        if self.models.is_empty() && self.model_seeds.is_empty() {
            return bad("either model files or model seeds are required");
        }
        if self.distributions.is_empty() || self.sizes.is_empty() || self.composers.is_empty() {
            return bad("distributions, sizes and composers must not be empty");
        }
        if self.alphas.is_empty() {
            return bad("alpha list must not be empty");
        }
        if self.model_levels == 0 {
            return bad("model levels must be positive");
        }
        for m in &self.models {
            if !m.is_file() {
                return Err(Error::Config(format!(
                    "model file {} does not exist",
                    m.display()
                )));
            }
        }
        Ok(())
    }

    fn load_models(&self) -> Result<Vec<(String, TempCpNet)>> {
        if self.models.is_empty() {
            return Ok(self
                .model_seeds
                .iter()
                .map(|&s| {
                    (
                        format!("desk{}-{s}", self.model_levels),
                        ModelSpec::desk(self.model_levels).generate(s),
                    )
                })
                .collect());
        }
        self.models
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let name = p
                    .file_stem()
                    .map_or("model".into(), |s| s.to_string_lossy().into_owned());
                Ok((name, TempCpNet::parse(&text)?))
            })
            .collect()
    }
}

/// One composer run in a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub model: String,
    pub distribution: String,
    pub n: usize,
    pub seed: u64,
    pub composer: String,
    pub alpha: Option<f64>,
    pub achieved: Option<u64>,
    pub oracle: Option<u64>,
    pub np: Option<f64>,
    pub episodes: Option<usize>,
    pub visited: Option<usize>,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("report rows serialize");
    }
    if rows.is_empty() {
        w.write_record([
            "instance",
            "model",
            "distribution",
            "n",
            "seed",
            "composer",
            "alpha",
            "achieved",
            "oracle",
            "np",
            "episodes",
            "visited",
            "wall_ms",
            "error",
        ])
        .expect("header writes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::RequestFormat {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

struct Instance {
    model: usize,
    distribution: Distribution,
    n: usize,
    seed: u64,
}

/// Runs the grid `model x distribution x size x seed x composer x alpha`.
/// Rows come back in grid order whatever the thread scheduling.
pub fn run_bench(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let models = config
        .load_models()?
        .into_iter()
        .map(|(name, m)| Ok((name, IndexedTempCpNet::build(m)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut instances = Vec::new();
    for model in 0..models.len() {
        for &distribution in &config.distributions {
            for &n in &config.sizes {
                for &seed in &config.seeds {
                    instances.push(Instance {
                        model,
                        distribution,
                        n,
                        seed,
                    });
                }
            }
        }
    }
    let rows: Vec<Vec<ReportRow>> = instances
        .par_iter()
        .map(|inst| run_instance(config, &models[inst.model], inst))
        .collect();
    Ok(Report {
        rows: rows.into_iter().flatten().collect(),
    })
}

fn run_instance(
    config: &RunConfig,
    (model_name, net): &(String, IndexedTempCpNet),
    inst: &Instance,
) -> Vec<ReportRow> {
    let base = ReportRow {
        instance: format!(
            "{model_name}/{}/n{}/s{}",
            inst.distribution, inst.n, inst.seed
        ),
        model: model_name.clone(),
        distribution: inst.distribution.to_string(),
        n: inst.n,
        seed: inst.seed,
        composer: String::new(),
        alpha: None,
        achieved: None,
        oracle: None,
        np: None,
        episodes: None,
        visited: None,
        wall_ms: None,
        error: None,
    };
    let fail = |e: Error| {
        config
            .composers
            .iter()
            .map(|k| ReportRow {
                composer: k.to_string(),
                error: Some(e.to_string()),
                ..base.clone()
            })
            .collect()
    };
    let spec = WorkloadSpec::desk(inst.distribution, inst.n, inst.seed)
        .with_horizon(net.model().horizon().1);
    let set = match generate_workload(&spec) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let problem = match CompositionProblem::new(net, &set) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let oracle = (inst.n <= config.oracle_cap)
        .then(|| dp_compose(&problem, config.oracle_cap).ok())
        .flatten()
        .map(|c| c.rank);

    let mut rows = Vec::new();
    for &kind in &config.composers {
        let alphas: Vec<Option<f64>> = if kind.learner().is_some() {
            config.alphas.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        };
        for alpha in alphas {
            let params = LearnParams {
                alpha: alpha.unwrap_or(0.5),
                gamma: config.gamma,
                episodes: config.episodes,
                seed: inst.seed,
                ..LearnParams::default()
            };
            let started = Instant::now();
            let result = run_composer(&problem, kind, &params, config.oracle_cap);
            let wall = started.elapsed().as_secs_f64() * 1e3;
            let mut row = ReportRow {
                composer: kind.to_string(),
                alpha,
                oracle,
                wall_ms: config.timing.then_some(wall),
                ..base.clone()
            };
            match result {
                Ok(c) => {
                    row.achieved = Some(c.rank);
                    row.np = oracle.and_then(|o| np_metric(c.rank, o));
                    if kind.learner().is_some() {
                        row.episodes = Some(c.episodes);
                        row.visited = Some(c.visited);
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Distribution,
    Size,
    Composer,
    Alpha,
}

impl GroupKey {
    fn value(self, row: &ReportRow) -> String {
        match self {
            GroupKey::Distribution => row.distribution.clone(),
            GroupKey::Size => row.n.to_string(),
            GroupKey::Composer => row.composer.clone(),
            GroupKey::Alpha => row.alpha.map_or("-".into(), |a| a.to_string()),
        }
    }

    fn name(self) -> &'static str {
        match self {
            GroupKey::Distribution => "distribution",
            GroupKey::Size => "n",
            GroupKey::Composer => "composer",
            GroupKey::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: Vec<String>,
    pub runs: usize,
    /// Runs with a defined NP.
    pub scored: usize,
    pub mean_np: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub mean_episodes: Option<f64>,
    pub mean_visited: Option<f64>,
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Percentile bootstrap confidence interval of the mean.
pub fn bootstrap_ci(values: &[f64], level: f64, resamples: usize, seed: u64) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let s: f64 = (0..values.len())
                .map(|_| values[rng.random_range(0..values.len())])
                .sum();
            s / values.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Some((at(tail), at(1.0 - tail)))
}

/// Groups rows by `keys` (in first-seen order) and averages NP with a 95%
/// bootstrap interval, plus mean episodes and visited entries.
pub fn summarize(rows: &[ReportRow], keys: &[GroupKey]) -> Vec<SummaryRow> {
    let mut groups: Vec<(Vec<String>, Vec<&ReportRow>)> = Vec::new();
    for r in rows {
        let key: Vec<String> = keys.iter().map(|k| k.value(r)).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (key, members))| {
            let nps: Vec<f64> = members.iter().filter_map(|r| r.np).collect();
            let eps: Vec<f64> = members
                .iter()
                .filter_map(|r| r.episodes.map(|e| e as f64))
                .collect();
            let vis: Vec<f64> = members
                .iter()
                .filter_map(|r| r.visited.map(|v| v as f64))
                .collect();
            let ci = bootstrap_ci(&nps, 0.95, 1000, 0x5eed + i as u64);
            SummaryRow {
                key,
                runs: members.len(),
                scored: nps.len(),
                mean_np: mean(&nps),
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
                mean_episodes: mean(&eps),
                mean_visited: mean(&vis),
            }
        })
        .collect()
}

pub fn summary_to_csv(keys: &[GroupKey], summary: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
    header.extend([
        "runs",
        "scored",
        "mean_np",
        "ci_low",
        "ci_high",
        "mean_episodes",
        "mean_visited",
    ]);
    w.write_record(&header).expect("header writes");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
    for s in summary {
        let mut rec = s.key.clone();
        rec.extend([
            s.runs.to_string(),
            s.scored.to_string(),
            opt(s.mean_np),
            opt(s.ci_low),
            opt(s.ci_high),
            opt(s.mean_episodes),
            opt(s.mean_visited),
        ]);
        w.write_record(&rec).expect("record writes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn np_orientation() {
        assert_eq!(np_metric(10, 10), Some(1.0));
        assert_eq!(np_metric(20, 10), Some(0.5));
        assert_eq!(np_metric(0, 10), Some(0.0));
        assert_eq!(np_metric(5, 0), None);
    }

    #[test]
    fn composer_names_round_trip() {
        for k in ComposerKind::ALL {
            assert_eq!(ComposerKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(ComposerKind::parse("nope"), None);
    }

    #[test]
    fn bootstrap_of_constant_is_degenerate() {
        let (lo, hi) = bootstrap_ci(&[0.7; 12], 0.95, 200, 1).unwrap();
        assert!((lo - 0.7).abs() < 1e-12 && (hi - 0.7).abs() < 1e-12);
        assert_eq!(bootstrap_ci(&[], 0.95, 200, 1), None);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut c = RunConfig {
            alphas: vec![0.2, 0.5, 0.8],
            episodes: Some(40),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.seeds.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
