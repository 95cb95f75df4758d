//! Sequential local optimization along a fixed interval order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Composition, CompositionProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitOrder {
    LeftToRight,
    RightToLeft,
    Random { seed: u64 },
}

impl VisitOrder {
    pub fn sequence(self, m: usize) -> Vec<usize> {
        match self {
            VisitOrder::LeftToRight => (0..m).collect(),
            VisitOrder::RightToLeft => (0..m).rev().collect(),
            VisitOrder::Random { seed } => {
                let mut v: Vec<usize> = (0..m).collect();
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                v
            }
        }
    }
}

/// Visits intervals in `order`. In each interval the surviving candidates
/// are tried by decreasing utility, the reward of adding the candidate alone
/// divided by its length; a candidate is accepted when all its intervals
/// stay indexed and the interval's rank does not get worse. Candidates not
/// accepted are rejected for the remaining intervals.
pub fn heuristic_compose(problem: &CompositionProblem<'_>, order: VisitOrder) -> Composition {
    let mut state = problem.start_state();
    let mut trace = Vec::new();
    for (o, s) in order
        .sequence(problem.interval_count())
        .into_iter()
        .enumerate()
    {
        let acts = problem.actions(s);
        let committed = acts.mask_of(&state.accepted);
        let blocked = acts.mask_of(&state.rejected);
        let rank_of = |mask: u64| acts.position(mask).map(|i| acts.ranks[i]);
        let mut scored: Vec<(f64, usize)> = (0..acts.candidates.len())
            .filter(|j| (committed | blocked) >> j & 1 == 0)
            .filter_map(|j| {
                let rank = rank_of(committed | 1 << j)?;
                let r = acts.candidates[j];
                Some((
                    problem.reward_of_rank(s, rank) / f64::from(problem.lengths()[r]),
                    j,
                ))
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let legal = problem.legal_actions(s, &state);
        let is_legal = |mask: u64| {
            acts.position(mask)
                .is_some_and(|i| legal.binary_search(&(i as u32)).is_ok())
        };
        let mut mask = committed;
        let mut rank = rank_of(mask).expect("committed configuration is indexed");
        for (_, j) in scored {
            let trial = mask | 1 << j;
            if !is_legal(trial) {
                continue;
            }
            let trial_rank = rank_of(trial).expect("legal configurations are indexed");
            if trial_rank <= rank {
                mask = trial;
                rank = trial_rank;
            }
        }
        let index = acts
            .position(mask)
            .expect("chosen configuration is indexed") as u32;
        trace.push(problem.step(o, s, index, &mut state));
    }
    let accepted: Vec<usize> = state.accepted.ones().collect();
    problem.finish(accepted, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::fixtures::{chain, requests, two_step};

    #[test]
    fn visit_order_changes_the_outcome() {
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        let ltr = heuristic_compose(&p, VisitOrder::LeftToRight);
        let rtl = heuristic_compose(&p, VisitOrder::RightToLeft);
        // left to right takes A first, which strands B
        assert_eq!(ltr.accepted_ids, vec!["A", "C"]);
        assert_eq!(ltr.rank, 3);
        assert_eq!(rtl.accepted_ids, vec!["B", "C"]);
        assert_eq!(rtl.rank, 2);
    }

    #[test]
    fn single_feasible_request_is_accepted_in_any_order() {
        let net = chain(3);
        let set = requests(&[("R", 0, 1, 15.0)]);
        let p = CompositionProblem::new(&net, &set).unwrap();
        for order in [
            VisitOrder::LeftToRight,
            VisitOrder::RightToLeft,
            VisitOrder::Random { seed: 9 },
        ] {
            assert_eq!(heuristic_compose(&p, order).accepted, vec![0]);
        }
    }

    #[test]
    fn random_order_is_seeded() {
        assert_eq!(
            VisitOrder::Random { seed: 3 }.sequence(12),
            VisitOrder::Random { seed: 3 }.sequence(12)
        );
        let mut s = VisitOrder::Random { seed: 3 }.sequence(12);
        s.sort_unstable();
        assert_eq!(s, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn trace_visits_each_interval_once() {
        let (net, set) = two_step();
        let p = CompositionProblem::new(&net, &set).unwrap();
        let c = heuristic_compose(&p, VisitOrder::Random { seed: 1 });
        let mut seen: Vec<usize> = c.trace.iter().map(|t| t.interval).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1]);
    }
}
