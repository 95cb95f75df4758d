//! Exact composers: exhaustive enumeration and a dynamic program over
//! request prefixes.

use rustc_hash::FxHashMap;

use super::{Composition, CompositionProblem};
use crate::error::{Error, Result};
use crate::request::Aggregate;

/// Largest request count the exact composers accept by default.
pub const ORACLE_CAP: usize = 20;

fn check_cap(problem: &CompositionProblem<'_>, composer: &'static str, cap: usize) -> Result<()> {
    if problem.len() > cap {
        return Err(Error::CapExceeded {
            composer,
            cap,
            got: problem.len(),
        });
    }
    Ok(())
}

/// Better of two candidate selections: lower rank, then the
/// lexicographically smaller sorted index list.
fn improves(rank: u64, members: &[usize], best: &Option<(u64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((r, m)) => rank < *r || (rank == *r && members < m.as_slice()),
    }
}

/// Enumerates every subset and returns the feasible non-empty one with the
/// lowest total rank, or the empty composition when none is feasible.
pub fn brute_force(problem: &CompositionProblem<'_>, cap: usize) -> Result<Composition> {
    check_cap(problem, "brute_force", cap)?;
    let n = problem.len();
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut members = Vec::with_capacity(n);
    for mask in 1u64..(1u64 << n) {
        members.clear();
        members.extend((0..n).filter(|i| mask >> i & 1 == 1));
        if let Some(rank) = problem.global_rank(&members) {
            if improves(rank, &members, &best) {
                best = Some((rank, members.clone()));
            }
        }
    }
    Ok(problem.finish(best.map(|b| b.1).unwrap_or_default(), Vec::new()))
}

#[derive(Clone)]
struct DpState {
    aggregates: Vec<Aggregate>,
    members: Vec<usize>,
}

fn state_key(aggregates: &[Aggregate]) -> Vec<u64> {
    let mut key = Vec::new();
    for a in aggregates {
        key.extend(a.values.iter().map(|v| v.to_bits()));
        key.push(u64::from(a.long_term));
    }
    key
}

/// Dynamic program over `(prefix length, selection size)`.
///
/// Each cell holds the distinct per-interval aggregate states reachable by
/// choosing `k` of the first `n` requests. Selections reaching the same
/// state share every future extension and final rank, so only the
/// lexicographically smallest is kept; states whose aggregate leaves an
/// index are dropped since aggregates only grow. The answer is the best
/// state over all `k >= 1`, which equals the exhaustive optimum.
pub fn dp_compose(problem: &CompositionProblem<'_>, cap: usize) -> Result<Composition> {
    check_cap(problem, "dp_compose", cap)?;
    let n = problem.len();
    let m = problem.interval_count();
    let net = problem.net();
    let rules = net.model().rules();
    let empty = DpState {
        aggregates: vec![Aggregate::empty(rules.len()); m],
        members: Vec::new(),
    };
    let mut table: Vec<FxHashMap<Vec<u64>, DpState>> = vec![FxHashMap::default(); n + 1];
    table[0].insert(state_key(&empty.aggregates), empty);
    for r in 0..n {
        let seg = &problem.segmented()[r];
        for k in (1..=r + 1).rev() {
            let (lower, upper) = table.split_at_mut(k);
            let from = &lower[k - 1];
            let into = &mut upper[0];
            for state in from.values() {
                let mut next = state.clone();
                let feasible = seg.active_intervals().all(|s| {
                    let segment = seg.segments[s].as_ref().expect("active");
                    next.aggregates[s].add(segment, &rules);
                    net.rank_aggregate(s, &next.aggregates[s]).is_some()
                });
                if !feasible {
                    continue;
                }
                next.members.push(r);
                let key = state_key(&next.aggregates);
                match into.get_mut(&key) {
                    Some(existing) if existing.members <= next.members => {}
                    Some(existing) => *existing = next,
                    None => {
                        into.insert(key, next);
                    }
                }
            }
        }
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    for cell in &table[1..] {
        for state in cell.values() {
            let rank: u64 = state
                .aggregates
                .iter()
                .enumerate()
                .map(|(s, a)| u64::from(net.rank_aggregate(s, a).expect("kept states are indexed")))
                .sum();
            if improves(rank, &state.members, &best) {
                best = Some((rank, state.members.clone()));
            }
        }
    }
    Ok(problem.finish(best.map(|b| b.1).unwrap_or_default(), Vec::new()))
}
