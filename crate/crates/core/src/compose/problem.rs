//! Composition instances: segmented requests against an indexed model,
//! per-interval candidate lists and their feasible configurations.

use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::index::IndexedTempCpNet;
use crate::preference::AggregationRule;
use crate::request::{Aggregate, RequestSet, SegmentedRequest};

use super::{Composition, TraceStep};

/// Most concurrent candidates one interval may hold; configurations are
/// encoded as bitmasks over the candidate list.
pub const MAX_CANDIDATES: usize = 63;

/// Cap on the number of feasible configurations enumerated per interval.
pub const MAX_CONFIGURATIONS: usize = 1 << 20;

/// Growable bitset over request indexes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn with_capacity(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| word >> b & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }
}

/// The feasible configurations of one interval, each a bitmask over the
/// interval's candidate list, sorted ascending.
#[derive(Debug, Clone)]
pub struct IntervalActions {
    pub candidates: Vec<usize>,
    pub masks: Vec<u64>,
    pub ranks: Vec<u32>,
    lookup: FxHashMap<u64, u32>,
}

impl IntervalActions {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Position of a configuration in `masks`, if feasible.
    pub fn position(&self, mask: u64) -> Option<usize> {
        self.lookup.get(&mask).map(|&i| i as usize)
    }

    /// Request indexes selected by a configuration mask.
    pub fn members(&self, mask: u64) -> impl Iterator<Item = usize> + '_ {
        self.candidates
            .iter()
            .enumerate()
            .filter(move |(j, _)| mask >> j & 1 == 1)
            .map(|(_, &r)| r)
    }

    pub fn mask_of(&self, set: &Bits) -> u64 {
        self.candidates
            .iter()
            .enumerate()
            .filter(|(_, &r)| set.get(r))
            .fold(0, |m, (j, _)| m | 1 << j)
    }
}

/// Acceptance state within one sequential pass over the intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpisodeState {
    pub accepted: Bits,
    pub rejected: Bits,
    pub visited: u64,
}

impl EpisodeState {
    pub fn is_visited(&self, interval: usize) -> bool {
        self.visited >> interval & 1 == 1
    }
}

pub struct CompositionProblem<'a> {
    net: &'a IndexedTempCpNet,
    set: RequestSet,
    ids: Vec<String>,
    lengths: Vec<u32>,
    segmented: Vec<SegmentedRequest>,
    rules: Vec<AggregationRule>,
    actions: Vec<IntervalActions>,
}

impl<'a> CompositionProblem<'a> {
    pub fn new(net: &'a IndexedTempCpNet, set: &RequestSet) -> Result<Self> {
        let segmented = set.segment_all(net.model())?;
        let m = net.interval_count();
        if m > 64 {
            return Err(Error::IntervalOutOfRange {
                index: m - 1,
                count: 64,
            });
        }
        let rules = net.model().rules();
        let mut problem = Self {
            net,
            set: set.clone(),
            ids: set.requests().iter().map(|r| r.id.clone()).collect(),
            lengths: set.requests().iter().map(|r| r.length).collect(),
            segmented,
            rules,
            actions: Vec::with_capacity(m),
        };
        for s in 0..m {
            let candidates: Vec<usize> = (0..problem.len())
                .filter(|&i| problem.segmented[i].is_active(s))
                .collect();
            if candidates.len() > MAX_CANDIDATES {
                return Err(Error::TooManyCandidates {
                    interval: s,
                    count: candidates.len(),
                    max: MAX_CANDIDATES,
                });
            }
            let actions = problem.enumerate(s, candidates)?;
            problem.actions.push(actions);
        }
        Ok(problem)
    }

    /// Depth-first enumeration of the interval's feasible configurations.
    /// Aggregates only grow as members are added, so an unindexed prefix
    /// prunes all of its extensions.
    fn enumerate(&self, s: usize, candidates: Vec<usize>) -> Result<IntervalActions> {
        let mut found: Vec<(u64, u32)> = Vec::new();
        let empty = Aggregate::empty(self.rules.len());
        let mut stack = vec![(0u64, 0usize, empty)];
        while let Some((mask, next, agg)) = stack.pop() {
            let Some(rank) = self.net.rank_aggregate(s, &agg) else {
                continue;
            };
            found.push((mask, rank));
            if found.len() > MAX_CONFIGURATIONS {
                return Err(Error::ActionSpace {
                    interval: s,
                    max: MAX_CONFIGURATIONS,
                });
            }
            for (j, &r) in candidates.iter().enumerate().skip(next) {
                let mut child = agg.clone();
                child.add(self.segment(r, s), &self.rules);
                stack.push((mask | 1 << j, j + 1, child));
            }
        }
        found.sort_unstable_by_key(|&(mask, _)| mask);
        let lookup = found
            .iter()
            .enumerate()
            .map(|(i, &(mask, _))| (mask, i as u32))
            .collect();
        Ok(IntervalActions {
            candidates,
            masks: found.iter().map(|&(m, _)| m).collect(),
            ranks: found.iter().map(|&(_, r)| r).collect(),
            lookup,
        })
    }

    fn segment(&self, request: usize, s: usize) -> &crate::request::Segment {
        self.segmented[request].segments[s]
            .as_ref()
            .expect("candidates are active in their interval")
    }

    pub fn net(&self) -> &IndexedTempCpNet {
        self.net
    }

    pub fn set(&self) -> &RequestSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn interval_count(&self) -> usize {
        self.actions.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn segmented(&self) -> &[SegmentedRequest] {
        &self.segmented
    }

    pub fn actions(&self, s: usize) -> &IntervalActions {
        &self.actions[s]
    }

    pub fn candidates(&self, s: usize) -> &[usize] {
        &self.actions[s].candidates
    }

    pub fn q(&self, s: usize) -> u32 {
        self.net.q(s)
    }

    /// Reward of an interval rank: `q + 1 - rank`, so rank 1 earns `q`.
    pub fn reward_of_rank(&self, s: usize, rank: u32) -> f64 {
        f64::from(self.q(s) + 1 - rank)
    }

    /// Reward of configuring interval `s` with exactly `members` active.
    pub fn reward(&self, s: usize, members: &[usize]) -> Result<f64> {
        let acts = &self.actions[s];
        let mut mask = 0u64;
        for &r in members {
            let j = acts
                .candidates
                .iter()
                .position(|&c| c == r)
                .ok_or(Error::InfeasibleAction(s))?;
            mask |= 1 << j;
        }
        let i = acts.position(mask).ok_or(Error::InfeasibleAction(s))?;
        Ok(self.reward_of_rank(s, acts.ranks[i]))
    }

    /// Rank of interval `s` configured with the members of `set`.
    pub fn interval_rank(&self, s: usize, set: &Bits) -> Option<u32> {
        let acts = &self.actions[s];
        acts.position(acts.mask_of(set)).map(|i| acts.ranks[i])
    }

    /// Total rank of a selection; `None` when infeasible, 0 when empty.
    pub fn global_rank(&self, selection: &[usize]) -> Option<u64> {
        if selection.is_empty() {
            return Some(0);
        }
        let set = self.bits(selection);
        (0..self.interval_count())
            .map(|s| self.interval_rank(s, &set).map(u64::from))
            .sum()
    }

    pub fn bits(&self, selection: &[usize]) -> Bits {
        let mut b = Bits::with_capacity(self.len());
        for &i in selection {
            b.set(i);
        }
        b
    }

    pub fn start_state(&self) -> EpisodeState {
        EpisodeState {
            accepted: Bits::with_capacity(self.len()),
            rejected: Bits::with_capacity(self.len()),
            visited: 0,
        }
    }

    /// Whether accepting `added` on top of the state's accepted set keeps
    /// every other interval those requests touch indexed.
    fn feasible_elsewhere(&self, s: usize, state: &EpisodeState, added: &[usize]) -> bool {
        if added.is_empty() {
            return true;
        }
        let mut merged = state.accepted.clone();
        for &r in added {
            merged.set(r);
        }
        let mut touched = 0u64;
        for &r in added {
            for k in self.segmented[r].active_intervals() {
                touched |= 1 << k;
            }
        }
        (0..self.interval_count())
            .filter(|&k| k != s && touched >> k & 1 == 1)
            .all(|k| self.interval_rank(k, &merged).is_some())
    }

    /// Configurations of interval `s` reachable from `state`: previously
    /// accepted candidates stay, previously rejected ones stay out, and the
    /// newly accepted requests keep all their intervals feasible.
    pub fn legal_actions(&self, s: usize, state: &EpisodeState) -> Vec<u32> {
        let acts = &self.actions[s];
        let committed = acts.mask_of(&state.accepted);
        let blocked = acts.mask_of(&state.rejected);
        let mut added = Vec::new();
        acts.masks
            .iter()
            .enumerate()
            .filter(|(_, &mask)| mask & committed == committed && mask & blocked == 0)
            .filter(|(_, &mask)| {
                added.clear();
                added.extend(acts.members(mask & !committed));
                self.feasible_elsewhere(s, state, &added)
            })
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Applies configuration `index` of interval `s`: new members are
    /// accepted and the remaining free candidates rejected.
    pub fn apply(&self, s: usize, index: u32, state: &mut EpisodeState) -> Vec<usize> {
        let acts = &self.actions[s];
        let mask = acts.masks[index as usize];
        let mut added = Vec::new();
        for (j, &r) in acts.candidates.iter().enumerate() {
            let chosen = mask >> j & 1 == 1;
            if chosen && !state.accepted.get(r) {
                state.accepted.set(r);
                added.push(r);
            } else if !chosen && !state.accepted.get(r) {
                state.rejected.set(r);
            }
        }
        state.visited |= 1 << s;
        added
    }

    /// Builds a composition from an accepted set, checking feasibility.
    pub fn finish(&self, mut accepted: Vec<usize>, trace: Vec<TraceStep>) -> Composition {
        accepted.sort_unstable();
        accepted.dedup();
        let rank = self
            .global_rank(&accepted)
            .expect("composers only return feasible selections");
        Composition {
            accepted_ids: accepted.iter().map(|&i| self.ids[i].clone()).collect(),
            accepted,
            rank,
            trace,
            episodes: 0,
            visited: 0,
        }
    }

    /// Applies configuration `index` of interval `s` and records the step.
    pub(crate) fn step(
        &self,
        order: usize,
        s: usize,
        index: u32,
        state: &mut EpisodeState,
    ) -> TraceStep {
        let acts = &self.actions[s];
        let added = self.apply(s, index, state);
        TraceStep {
            order,
            interval: s,
            action: acts.masks[index as usize],
            accepted: added,
            reward: self.reward_of_rank(s, acts.ranks[index as usize]),
        }
    }
}

/// Memoized legal-action lists keyed by interval and episode state.
pub(crate) struct LegalCache {
    map: FxHashMap<(usize, EpisodeState), Rc<[u32]>>,
    limit: usize,
}

impl LegalCache {
    pub fn new(limit: usize) -> Self {
        Self {
            map: FxHashMap::default(),
            limit,
        }
    }

    pub fn get(
        &mut self,
        problem: &CompositionProblem<'_>,
        s: usize,
        state: &EpisodeState,
    ) -> Rc<[u32]> {
        let key = (
            s,
            EpisodeState {
                visited: 0,
                ..state.clone()
            },
        );
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        if self.map.len() >= self.limit {
            self.map.clear();
        }
        let v: Rc<[u32]> = problem.legal_actions(s, state).into();
        self.map.insert(key, v.clone());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::fixtures::{chain, requests, two_step};

    #[test]
    fn reward_runs_from_q_down_to_one() {
        let net = chain(15);
        let set = requests(&[("R", 0, 1, 145.0), ("S", 0, 1, 0.0)]);
        let p = CompositionProblem::new(&net, &set).unwrap();
        assert_eq!(p.q(0), 15);
        assert_eq!(p.reward_of_rank(0, 1), 15.0);
        assert_eq!(p.reward_of_rank(0, 15), 1.0);
        assert_eq!(p.reward(0, &[0]).unwrap(), 15.0);
        assert_eq!(p.reward(0, &[1]).unwrap(), 1.0);
    }

    #[test]
    fn reward_order_is_the_reverse_of_rank_order() {
        let net = chain(6);
        let set = requests(&[("A", 0, 1, 5.0), ("B", 0, 1, 12.0), ("C", 0, 1, 21.0)]);
        let p = CompositionProblem::new(&net, &set).unwrap();
        let acts = p.actions(0);
        let by_reward = (0..acts.len()).max_by(|&a, &b| {
            p.reward_of_rank(0, acts.ranks[a])
                .total_cmp(&p.reward_of_rank(0, acts.ranks[b]))
                .then(b.cmp(&a))
        });
        let by_rank = (0..acts.len()).min_by_key(|&a| acts.ranks[a]);
        assert_eq!(by_reward, by_rank);
    }

    #[test]
    fn three_free_candidates_give_eight_actions() {
        let net = chain(4);
        let set = requests(&[("A", 0, 1, 5.0), ("B", 0, 1, 5.0), ("C", 0, 1, 5.0)]);
        let p = CompositionProblem::new(&net, &set).unwrap();
        let legal = p.legal_actions(0, &p.start_state());
        assert_eq!(legal.len(), 8);
        assert!(legal.iter().any(|&i| p.actions(0).masks[i as usize] == 0));
    }

    #[test]
    fn all_rejected_leaves_only_the_empty_action() {
        let net = chain(4);
        let set = requests(&[("A", 0, 1, 5.0), ("B", 0, 1, 5.0)]);
        let p = CompositionProblem::new(&net, &set).unwrap();
        let mut state = p.start_state();
        state.rejected.set(0);
        state.rejected.set(1);
        let legal = p.legal_actions(0, &state);
        assert_eq!(legal.len(), 1);
        assert_eq!(p.actions(0).masks[legal[0] as usize], 0);
    }

    #[test]
    fn unindexed_aggregates_are_not_actions() {
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        // interval 0 holds A and B; together they overflow
        assert_eq!(p.candidates(0), &[0, 1]);
        assert_eq!(p.actions(0).position(0b11), None);
        assert_eq!(p.global_rank(&[0, 1]), None);
        assert_eq!(p.global_rank(&[1, 2]), Some(2));
        assert_eq!(p.global_rank(&[0, 2]), Some(3));
        assert_eq!(p.global_rank(&[]), Some(0));
    }

    #[test]
    fn accepting_a_request_prunes_its_conflicts_elsewhere() {
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        let mut state = p.start_state();
        let a_only = p.actions(0).position(0b01).unwrap() as u32;
        assert_eq!(p.apply(0, a_only, &mut state), vec![0]);
        assert!(state.rejected.get(1));
        // interval 1 can no longer take B
        let masks: Vec<u64> = p
            .legal_actions(1, &state)
            .iter()
            .map(|&i| p.actions(1).masks[i as usize])
            .collect();
        let b_bit = 1 << p.candidates(1).iter().position(|&r| r == 1).unwrap();
        assert!(masks.iter().all(|m| m & b_bit == 0));
        assert_eq!(masks.len(), 2);
    }

    #[test]
    fn acceptance_in_one_interval_respects_the_others() {
        // B is feasible in interval 1 only if interval 0 can still hold it
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        let mut state = p.start_state();
        state.accepted.set(0);
        let masks: Vec<u64> = p
            .legal_actions(1, &state)
            .iter()
            .map(|&i| p.actions(1).masks[i as usize])
            .collect();
        let b_bit = 1 << p.candidates(1).iter().position(|&r| r == 1).unwrap();
        assert!(masks.iter().all(|m| m & b_bit == 0));
    }

    #[test]
    fn legal_cache_agrees_with_direct_computation() {
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        let mut cache = LegalCache::new(4);
        let state = p.start_state();
        for s in 0..2 {
            assert_eq!(
                &*cache.get(&p, s, &state),
                p.legal_actions(s, &state).as_slice()
            );
        }
    }
}
