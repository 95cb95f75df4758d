//! Tabular learners: 2-D Q-learning, SARSA and 3-D Q-learning over
//! `(interval, configuration, execution order)`, with optional policy reuse
//! in the exploration step.
//!
//! An episode makes one decision per order slot `o = 0..m`. In the free
//! environment (2-D learners and off-policy 3-D) any feasible configuration
//! of any interval may be chosen at every step and intervals may repeat. The
//! on-policy 3-D learner visits each interval once per episode, keeps
//! earlier acceptances and never re-offers a request it rejected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::problem::LegalCache;
use super::{Composition, CompositionProblem, EpisodeState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OffPolicy,
    OnPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Q2d,
    Sarsa,
    Q3d(Mode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration probability of the first episode, decayed linearly.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episode cap; defaults to 500 per interval.
    pub episodes: Option<usize>,
    /// Learning stops once the largest update of an episode stays below
    /// this for `patience` consecutive episodes.
    pub tolerance: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.9,
            epsilon_start: 0.9,
            epsilon_end: 0.05,
            episodes: None,
            tolerance: 1e-6,
            patience: 10,
            seed: 0,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Hyperparameter(m.into()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.episodes == Some(0) {
            return bad("episode cap must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance must be non-negative");
        }
        Ok(())
    }

    pub fn episode_cap(&self, intervals: usize) -> usize {
        self.episodes.unwrap_or(500 * intervals)
    }

    fn epsilon(&self, episode: usize, cap: usize) -> f64 {
        if cap <= 1 {
            return self.epsilon_start;
        }
        let t = episode as f64 / (cap - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// One stored table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub interval: usize,
    pub action: u64,
    pub order: usize,
    pub value: f64,
    pub visits: u32,
}

/// Action values `Q[s, a, o]`; a 2-D table is the special case of one order.
#[derive(Debug, Clone, PartialEq)]
pub struct QCube {
    orders: usize,
    masks: Vec<Vec<u64>>,
    values: Vec<Vec<f64>>,
    visits: Vec<Vec<u32>>,
}

impl QCube {
    pub fn new(problem: &CompositionProblem<'_>, orders: usize) -> Self {
        let m = problem.interval_count();
        let masks: Vec<Vec<u64>> = (0..m).map(|s| problem.actions(s).masks.clone()).collect();
        let mut values = Vec::with_capacity(m * orders);
        for stage in &masks {
            for _ in 0..orders {
                values.push(vec![0.0; stage.len()]);
            }
        }
        let visits = values.iter().map(|v| vec![0; v.len()]).collect();
        Self {
            orders,
            masks,
            values,
            visits,
        }
    }

    /// Rebuilds a table for `problem` from stored rows.
    pub fn from_rows(
        problem: &CompositionProblem<'_>,
        orders: usize,
        rows: &[QRow],
    ) -> Result<Self> {
        let mut cube = Self::new(problem, orders);
        for row in rows {
            let bad = || Error::Schema(format!("table row {row:?} does not fit the instance"));
            if row.interval >= cube.intervals() || row.order >= orders || !row.value.is_finite() {
                return Err(bad());
            }
            let a = problem
                .actions(row.interval)
                .position(row.action)
                .ok_or_else(bad)?;
            let slot = cube.slot(row.interval, row.order);
            cube.values[slot][a] = row.value;
            cube.visits[slot][a] = row.visits;
        }
        Ok(cube)
    }

    pub fn intervals(&self) -> usize {
        self.masks.len()
    }

    pub fn orders(&self) -> usize {
        self.orders
    }

    fn slot(&self, s: usize, o: usize) -> usize {
        s * self.orders + o.min(self.orders - 1)
    }

    pub fn value(&self, s: usize, a: usize, o: usize) -> f64 {
        self.values[self.slot(s, o)][a]
    }

    pub fn visits(&self, s: usize, a: usize, o: usize) -> u32 {
        self.visits[self.slot(s, o)][a]
    }

    /// Applies `Q <- (1 - alpha) Q + alpha * target`; returns the change.
    pub fn update(&mut self, s: usize, a: usize, o: usize, alpha: f64, target: f64) -> f64 {
        let slot = self.slot(s, o);
        let q = &mut self.values[slot][a];
        let old = *q;
        *q = (1.0 - alpha) * old + alpha * target;
        self.visits[slot][a] += 1;
        (*q - old).abs()
    }

    /// Number of distinct entries updated at least once.
    pub fn visited(&self) -> usize {
        self.visits.iter().flatten().filter(|&&v| v > 0).count()
    }

    /// Updated entries in `(interval, order, action)` order.
    pub fn rows(&self) -> Vec<QRow> {
        let mut rows = Vec::new();
        for s in 0..self.intervals() {
            for o in 0..self.orders {
                let slot = self.slot(s, o);
                for (a, &v) in self.visits[slot].iter().enumerate() {
                    if v > 0 {
                        rows.push(QRow {
                            interval: s,
                            action: self.masks[s][a],
                            order: o,
                            value: self.values[slot][a],
                            visits: v,
                        });
                    }
                }
            }
        }
        rows
    }

    fn best_in(&self, s: usize, o: usize, legal: &[u32]) -> Option<(u32, f64)> {
        let row = &self.values[self.slot(s, o)];
        let mut best: Option<(u32, f64)> = None;
        for &a in legal {
            let v = row[a as usize];
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        best
    }

    fn best_all(&self, s: usize, o: usize) -> (u32, f64) {
        let row = &self.values[self.slot(s, o)];
        let mut best = (0u32, row[0]);
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > best.1 {
                best = (a as u32, v);
            }
        }
        best
    }
}

/// Past policies followed with probability `mu` during exploration. Each
/// plan lists, per order slot, an interval and the requests of this
/// instance it wants in that interval's configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReuseGuide {
    pub mu: f64,
    pub plans: Vec<Vec<(usize, Vec<usize>)>>,
}

struct Run<'p, 'a> {
    problem: &'p CompositionProblem<'a>,
    params: &'p LearnParams,
    cube: QCube,
    rng: ChaCha8Rng,
    cache: LegalCache,
    m: usize,
}

/// A chosen `(interval, configuration index)`.
type Choice = (usize, u32);

impl Run<'_, '_> {
    fn reward(&self, s: usize, a: u32) -> f64 {
        self.problem
            .reward_of_rank(s, self.problem.actions(s).ranks[a as usize])
    }

    /// Free-environment reward: a configuration without members earns nothing.
    fn free_reward(&self, s: usize, a: u32) -> f64 {
        if self.problem.actions(s).masks[a as usize] == 0 {
            0.0
        } else {
            self.reward(s, a)
        }
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn pick(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    fn free_choice(&mut self, s: usize, o: usize, epsilon: f64) -> u32 {
        let u = self.uniform();
        if u < epsilon {
            self.pick(self.problem.actions(s).len()) as u32
        } else {
            self.cube.best_all(s, o).0
        }
    }

    fn joint_best_free(&self, o: usize) -> (Choice, f64) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for s in 0..self.m {
            let (a, v) = self.cube.best_all(s, o);
            if v > best.1 {
                best = ((s, a), v);
            }
        }
        best
    }

    fn episode_2d(&mut self, sarsa: bool, epsilon: f64) -> f64 {
        let (alpha, gamma) = (self.params.alpha, self.params.gamma);
        let mut delta: f64 = 0.0;
        let mut s = self.pick(self.m);
        let mut a = self.free_choice(s, 0, epsilon);
        for t in 0..self.m {
            let r = self.free_reward(s, a);
            if t + 1 == self.m {
                delta = delta.max(self.cube.update(s, a as usize, 0, alpha, r));
                break;
            }
            let s2 = self.pick(self.m);
            let a2 = self.free_choice(s2, 0, epsilon);
            let next = if sarsa {
                self.cube.value(s2, a2 as usize, 0)
            } else {
                self.cube.best_all(s2, 0).1
            };
            delta = delta.max(self.cube.update(s, a as usize, 0, alpha, r + gamma * next));
            (s, a) = (s2, a2);
        }
        delta
    }

    fn episode_3d_free(&mut self, epsilon: f64) -> f64 {
        let (alpha, gamma) = (self.params.alpha, self.params.gamma);
        let mut delta: f64 = 0.0;
        let mut s = self.pick(self.m);
        let mut a = self.free_choice(s, 0, epsilon);
        for o in 0..self.m {
            let r = self.free_reward(s, a);
            if o + 1 == self.m {
                delta = delta.max(self.cube.update(s, a as usize, o, alpha, r));
                break;
            }
            let ((gs, ga), next) = self.joint_best_free(o + 1);
            let u = self.uniform();
            let (s2, a2) = if u < epsilon {
                let s2 = self.pick(self.m);
                (s2, self.pick(self.problem.actions(s2).len()) as u32)
            } else {
                (gs, ga)
            };
            delta = delta.max(self.cube.update(s, a as usize, o, alpha, r + gamma * next));
            (s, a) = (s2, a2);
        }
        delta
    }

    /// Greedy choice over unvisited intervals and their legal configurations.
    fn joint_best_legal(&mut self, o: usize, state: &EpisodeState) -> Option<(Choice, f64)> {
        let mut best: Option<(Choice, f64)> = None;
        for s in 0..self.m {
            if state.is_visited(s) {
                continue;
            }
            let legal = self.cache.get(self.problem, s, state);
            if let Some((a, v)) = self.cube.best_in(s, o, &legal) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some(((s, a), v));
                }
            }
        }
        best
    }

    /// Configuration of interval `s` a past plan step asks for, if legal.
    fn planned(&mut self, s: usize, wanted: &[usize], state: &EpisodeState) -> Option<u32> {
        if state.is_visited(s) {
            return None;
        }
        let acts = self.problem.actions(s);
        let mut mask = acts.mask_of(&state.accepted);
        for &r in wanted {
            if let Some(j) = acts.candidates.iter().position(|&c| c == r) {
                if !state.rejected.get(r) {
                    mask |= 1 << j;
                }
            }
        }
        let index = acts.position(mask)? as u32;
        let legal = self.cache.get(self.problem, s, state);
        legal.binary_search(&index).is_ok().then_some(index)
    }

    fn episode_on_policy(&mut self, epsilon: f64, guide: Option<(&ReuseGuide, usize)>) -> f64 {
        let (alpha, gamma) = (self.params.alpha, self.params.gamma);
        let mu = guide.map_or(0.0, |(g, _)| g.mu);
        let plan =
            guide.and_then(|(g, e)| (!g.plans.is_empty()).then(|| &g.plans[e % g.plans.len()]));
        let mut state = self.problem.start_state();
        let mut delta: f64 = 0.0;

        // first decision: the start interval is drawn, the configuration
        // follows the mu-epsilon-greedy rule within it
        let mut s = self.pick(self.m);
        let u = self.uniform();
        let mut a = None;
        if u < mu {
            if let Some((ps, wanted)) = plan.and_then(|p| p.first()) {
                if let Some(idx) = self.planned(*ps, wanted, &state) {
                    s = *ps;
                    a = Some(idx);
                }
            }
        }
        let legal = self.cache.get(self.problem, s, &state);
        let mut a = match a {
            Some(idx) => idx,
            None if u >= mu && (u - mu) / (1.0 - mu) < epsilon => legal[self.pick(legal.len())],
            None => {
                self.cube
                    .best_in(s, 0, &legal)
                    .expect("committed configuration is legal")
                    .0
            }
        };

        // rewards of intervals configured while nothing is accepted are
        // credited once the selection becomes non-empty, so an episode that
        // accepts nothing returns 0
        let mut deferred = 0.0;
        for o in 0..self.m {
            let mut r = self.reward(s, a);
            self.problem.apply(s, a, &mut state);
            if state.accepted.ones().next().is_none() {
                deferred += r;
                r = 0.0;
            } else {
                r += std::mem::take(&mut deferred);
            }
            if o + 1 == self.m {
                delta = delta.max(self.cube.update(s, a as usize, o, alpha, r));
                break;
            }
            let ((gs, ga), next) = self
                .joint_best_legal(o + 1, &state)
                .expect("an unvisited interval always admits its committed configuration");
            let u = self.uniform();
            let mut choice = None;
            if u < mu {
                if let Some((ps, wanted)) = plan.and_then(|p| p.get(o + 1)) {
                    choice = self.planned(*ps, wanted, &state).map(|idx| (*ps, idx));
                }
                choice = choice.or(Some((gs, ga)));
            } else if (u - mu) / (1.0 - mu) < epsilon {
                let open: Vec<usize> = (0..self.m).filter(|&k| !state.is_visited(k)).collect();
                let s2 = open[self.pick(open.len())];
                let legal = self.cache.get(self.problem, s2, &state);
                choice = Some((s2, legal[self.pick(legal.len())]));
            }
            let (s2, a2) = choice.unwrap_or((gs, ga));
            delta = delta.max(self.cube.update(s, a as usize, o, alpha, r + gamma * next));
            (s, a) = (s2, a2);
        }
        delta
    }
}

/// Trains a learner and returns the greedy composition with its table.
pub fn learn(
    problem: &CompositionProblem<'_>,
    learner: Learner,
    params: &LearnParams,
    guide: Option<&ReuseGuide>,
) -> Result<(Composition, QCube)> {
    params.validate()?;
    if let Some(g) = guide {
        if !(0.0..=1.0).contains(&g.mu) {
            return Err(Error::Hyperparameter("mu must lie in [0, 1]".into()));
        }
    }
    let m = problem.interval_count();
    let orders = match learner {
        Learner::Q3d(_) => m,
        _ => 1,
    };
    let mut run = Run {
        problem,
        params,
        cube: QCube::new(problem, orders),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        cache: LegalCache::new(1 << 14),
        m,
    };
    let cap = params.episode_cap(m);
    let mut calm = 0;
    let mut episodes = 0;
    for e in 0..cap {
        let epsilon = params.epsilon(e, cap);
        let delta = match learner {
            Learner::Q2d => run.episode_2d(false, epsilon),
            Learner::Sarsa => run.episode_2d(true, epsilon),
            Learner::Q3d(Mode::OffPolicy) => run.episode_3d_free(epsilon),
            Learner::Q3d(Mode::OnPolicy) => run.episode_on_policy(epsilon, guide.map(|g| (g, e))),
        };
        episodes += 1;
        calm = if delta < params.tolerance {
            calm + 1
        } else {
            0
        };
        if params.patience > 0 && calm >= params.patience {
            break;
        }
    }
    let mut composition = extract_policy(&run.cube, problem);
    composition.episodes = episodes;
    composition.visited = run.cube.visited();
    Ok((composition, run.cube))
}

/// Greedy rollout of a table under the visit-once rules.
///
/// A 3-D table picks, for each order slot, the best unvisited interval and
/// legal configuration; a 2-D table walks the intervals in natural order.
/// Ties go to the smallest `(interval, configuration mask)`.
pub fn extract_policy(cube: &QCube, problem: &CompositionProblem<'_>) -> Composition {
    let m = problem.interval_count();
    let mut state = problem.start_state();
    let mut trace = Vec::with_capacity(m);
    for o in 0..m {
        let mut best: Option<(Choice, f64)> = None;
        let intervals: Vec<usize> = if cube.orders() == 1 {
            vec![o]
        } else {
            (0..m).collect()
        };
        for s in intervals {
            if state.is_visited(s) {
                continue;
            }
            let legal = problem.legal_actions(s, &state);
            if let Some((a, v)) = cube.best_in(s, o, &legal) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some(((s, a), v));
                }
            }
        }
        let ((s, a), _) =
            best.expect("an unvisited interval always admits its committed configuration");
        trace.push(problem.step(o, s, a, &mut state));
    }
    problem.finish(state.accepted.ones().collect(), trace)
}

pub fn q2d_compose(
    problem: &CompositionProblem<'_>,
    params: &LearnParams,
) -> Result<(Composition, QCube)> {
    learn(problem, Learner::Q2d, params, None)
}

pub fn sarsa_compose(
    problem: &CompositionProblem<'_>,
    params: &LearnParams,
) -> Result<(Composition, QCube)> {
    learn(problem, Learner::Sarsa, params, None)
}

pub fn q3d_compose(
    problem: &CompositionProblem<'_>,
    mode: Mode,
    params: &LearnParams,
) -> Result<(Composition, QCube)> {
    learn(problem, Learner::Q3d(mode), params, None)
}
