//! Finding similar past request sets and reusing their policies.

use serde::{Deserialize, Serialize};

use super::{annotate_set, cluster, cophenetic, Library, LibraryEntry, Linkage};
use crate::compose::{
    learn, Composition, CompositionProblem, LearnParams, Learner, Mode, QCube, ReuseGuide,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReuseParams {
    /// Minimum similarity score for a library entry to be reused.
    pub similarity_threshold: f64,
    /// Minimum per-request similarity for an action mapping pair.
    pub mapping_threshold: f64,
    /// Probability of following a past policy during exploration.
    pub mu: f64,
    /// Episodes beyond one per reused policy.
    pub extra_episodes: usize,
    pub linkage: Linkage,
}

impl Default for ReuseParams {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.8,
            mapping_threshold: 0.8,
            mu: 0.5,
            extra_episodes: 50,
            linkage: Linkage::Slink,
        }
    }
}

impl ReuseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("similarity threshold", self.similarity_threshold),
            ("mapping threshold", self.mapping_threshold),
            ("mu", self.mu),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Hyperparameter(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A library entry accepted as similar, with its score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub entry: usize,
    pub score: f64,
}

/// Entries whose score `1 - |c_new - c_entry|` reaches `threshold`, best
/// first. An entry built from the identical request set scores 1 and leads;
/// entries without a defined coefficient only match by identity.
pub fn find_similar(
    library: &Library,
    digest: &str,
    coefficient: Option<f64>,
    threshold: f64,
) -> Vec<Match> {
    let mut out: Vec<(bool, Match)> = library
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            if e.digest == digest {
                return Some((
                    true,
                    Match {
                        entry: i,
                        score: 1.0,
                    },
                ));
            }
            let score = 1.0 - (coefficient? - e.coefficient?).abs();
            (score >= threshold).then_some((false, Match { entry: i, score }))
        })
        .collect();
    out.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.score.total_cmp(&a.1.score))
            .then(a.1.entry.cmp(&b.1.entry))
    });
    out.into_iter().map(|(_, m)| m).collect()
}

/// Library entries similar to the request set of `problem`, best first.
pub fn similar_entries(
    library: &Library,
    problem: &CompositionProblem<'_>,
    reuse: &ReuseParams,
) -> Vec<Match> {
    let set = problem.set();
    let coefficient = annotate_set(set, problem.net())
        .ok()
        .and_then(|a| cluster(&a, reuse.linkage).ok())
        .and_then(|t| cophenetic(&t).ok());
    find_similar(
        library,
        &super::digest(set),
        coefficient,
        reuse.similarity_threshold,
    )
}

/// Per-interval semantic profile: normalized level ordinals of the request's
/// own segment, `None` where it is inactive.
fn profiles(problem: &CompositionProblem<'_>) -> Vec<Vec<Option<Vec<f64>>>> {
    let model = problem.net().model();
    problem
        .segmented()
        .iter()
        .map(|seg| {
            seg.segments
                .iter()
                .zip(model.intervals())
                .map(|(s, iv)| {
                    let s = s.as_ref()?;
                    Some(
                        s.values
                            .iter()
                            .zip(iv.table.scales())
                            .map(|(&v, scale)| {
                                let top = scale.level_count() - 1;
                                let level =
                                    scale
                                        .map(v)
                                        .unwrap_or(if v < scale.lower() { 0 } else { top });
                                if top == 0 {
                                    0.0
                                } else {
                                    level as f64 / top as f64
                                }
                            })
                            .collect(),
                    )
                })
                .collect()
        })
        .collect()
}

fn profile_similarity(a: &[Option<Vec<f64>>], b: &[Option<Vec<f64>>]) -> f64 {
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (None, None) => 0.0,
            (Some(x), Some(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>() / x.len().max(1) as f64
            }
            _ => 1.0,
        })
        .sum();
    1.0 - total / a.len().max(1) as f64
}

/// Pairwise similarity of past (rows) and new (columns) requests.
pub fn similarity_matrix(
    past: &CompositionProblem<'_>,
    new: &CompositionProblem<'_>,
) -> Vec<Vec<f64>> {
    let pp = profiles(past);
    let np = profiles(new);
    pp.iter()
        .map(|a| np.iter().map(|b| profile_similarity(a, b)).collect())
        .collect()
}

/// One-to-one mapping `(past index, new index)` of maximum total
/// similarity over pairs scoring at least `threshold`. Among optimal
/// mappings, pairs closer to the diagonal win.
pub fn map_actions(
    past: &CompositionProblem<'_>,
    new: &CompositionProblem<'_>,
    threshold: f64,
) -> Vec<(usize, usize)> {
    let sim = similarity_matrix(past, new);
    let (rows, cols) = (past.len(), new.len());
    let size = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // similarity quantized to 1e-9, then scaled so the diagonal preference
    // only separates exact ties
    let scale = (size as i64 + 1).pow(2);
    let mut weight = vec![vec![0i64; size]; size];
    for (i, row) in sim.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            if s >= threshold {
                let near = (size - i.abs_diff(j)) as i64;
                weight[i][j] = (s * 1e9).round() as i64 * scale + near;
            }
        }
    }
    let assignment = max_weight_assignment(&weight);
    let mut out: Vec<(usize, usize)> = assignment
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols && weight[i][j] > 0)
        .collect();
    out.sort_unstable();
    out
}

/// Hungarian method on a square matrix; returns the column of each row.
fn max_weight_assignment(weight: &[Vec<i64>]) -> Vec<usize> {
    let n = weight.len();
    let top = weight.iter().flatten().copied().max().unwrap_or(0);
    let cost = |i: usize, j: usize| top - weight[i][j];
    // potentials and matching are 1-based; index 0 is the virtual root
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        way[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[owner[j] - 1] = j - 1;
    }
    col_of
}

/// The entry's plan translated to request indexes of `new`.
fn translate_plan(
    entry: &LibraryEntry,
    past: &CompositionProblem<'_>,
    new: &CompositionProblem<'_>,
    threshold: f64,
) -> Vec<(usize, Vec<usize>)> {
    let mapping = map_actions(past, new, threshold);
    entry
        .plan
        .iter()
        .map(|step| {
            let wanted = step
                .configuration
                .iter()
                .filter_map(|id| past.ids().iter().position(|p| p == id))
                .filter_map(|i| mapping.iter().find(|(p, _)| *p == i).map(|&(_, j)| j))
                .collect();
            (step.interval, wanted)
        })
        .collect()
}

/// Replays only the interval order of a stored policy, choosing in each
/// interval the legal configuration of best local rank. Ties prefer more
/// accepted requests, then the smaller configuration mask.
pub fn greedy_reuse(entry: &LibraryEntry, problem: &CompositionProblem<'_>) -> Composition {
    let m = problem.interval_count();
    let mut sequence: Vec<usize> = Vec::with_capacity(m);
    for step in &entry.plan {
        if step.interval < m && !sequence.contains(&step.interval) {
            sequence.push(step.interval);
        }
    }
    sequence.extend((0..m).filter(|s| !entry.plan.iter().any(|p| p.interval == *s)));
    let mut state = problem.start_state();
    let mut trace = Vec::with_capacity(m);
    for (o, s) in sequence.into_iter().enumerate() {
        let acts = problem.actions(s);
        let legal = problem.legal_actions(s, &state);
        let best = legal
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (a, b) = (a as usize, b as usize);
                acts.ranks[a]
                    .cmp(&acts.ranks[b])
                    .then(acts.masks[b].count_ones().cmp(&acts.masks[a].count_ones()))
                    .then(acts.masks[a].cmp(&acts.masks[b]))
            })
            .expect("the committed configuration is always legal");
        trace.push(problem.step(o, s, best, &mut state));
    }
    problem.finish(state.accepted.ones().collect(), trace)
}

/// Outcome of a reuse run.
#[derive(Debug, Clone)]
pub struct ReuseOutcome {
    pub composition: Composition,
    pub cube: QCube,
    pub matches: Vec<Match>,
}

/// On-policy 3-D learning whose exploration follows similar past policies
/// with probability `mu`. Runs one episode per reused policy plus
/// `extra_episodes`; without similar entries it learns from scratch with
/// the full episode budget of `params`.
pub fn reuse_compose(
    library: &Library,
    problem: &CompositionProblem<'_>,
    reuse: &ReuseParams,
    params: &LearnParams,
) -> Result<ReuseOutcome> {
    reuse.validate()?;
    let matches = similar_entries(library, problem, reuse);
    if matches.is_empty() {
        let (composition, cube) = learn(problem, Learner::Q3d(Mode::OnPolicy), params, None)?;
        return Ok(ReuseOutcome {
            composition,
            cube,
            matches,
        });
    }
    let mut plans = Vec::with_capacity(matches.len());
    for m in &matches {
        let entry = &library.entries()[m.entry];
        let past = CompositionProblem::new(problem.net(), &entry.source)?;
        plans.push(translate_plan(
            entry,
            &past,
            problem,
            reuse.mapping_threshold,
        ));
    }
    let guide = ReuseGuide {
        mu: reuse.mu,
        plans,
    };
    let params = LearnParams {
        episodes: Some(matches.len() + reuse.extra_episodes),
        ..params.clone()
    };
    let (composition, cube) = learn(problem, Learner::Q3d(Mode::OnPolicy), &params, Some(&guide))?;
    Ok(ReuseOutcome {
        composition,
        cube,
        matches,
    })
}
