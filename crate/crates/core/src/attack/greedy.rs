use super::{AttackMethod, AttackReport, Poisons};
use crate::stats::{with_accum, Accum, KeySet, SummaryStats};

/// Best single insertion into `points` (sorted, distinct, shifted so the
/// minimum is 0) among integers adjacent to an existing point and strictly
/// inside the current range. Returns `(shifted candidate, its insertion
/// index, mse after insertion, mse before)`, ties going to the smaller
/// candidate.
fn best_insertion<A: Accum>(points: &[u64]) -> (Option<(u64, usize, f64)>, f64) {
    let mut prefix = Vec::with_capacity(points.len() + 1);
    prefix.push(A::zero());
    for &x in points {
        prefix.push(prefix[prefix.len() - 1] + A::from_u64(x));
    }
    let current = SummaryStats::<A>::from_sorted(points.iter().copied());
    let before = current.mse();

    let eval = |p: u64, j: usize| {
        let pa = A::from_u64(p);
        SummaryStats {
            m: current.m + 1,
            sum_x: current.sum_x + pa,
            sum_x2: current.sum_x2 + pa * pa,
            sum_xr: current.sum_xr
                + pa * A::from_u64(j as u64 + 1)
                + (current.sum_x - prefix[j]),
        }
        .mse()
    };

    let last = points.len() - 1;
    let mut best: Option<(u64, usize, f64)> = None;
    let mut consider = |p: u64, j: usize| {
        let mse = eval(p, j);
        if best.is_none_or(|(_, _, b)| mse > b) {
            best = Some((p, j, mse));
        }
    };
    // Candidates arrive in ascending order: x−1 then x+1 for each point.
    for idx in 0..=last {
        let x = points[idx];
        // x−1, unless occupied or already produced as the previous point's +1
        if idx > 0 && points[idx - 1] + 1 < x - 1 {
            consider(x - 1, idx);
        }
        if idx < last && x + 1 < points[idx + 1] {
            consider(x + 1, idx + 1);
        }
    }
    (best, before)
}

fn single_point_generic<A: Accum>(keys: &KeySet) -> Option<u64> {
    let shifted: Vec<u64> = (0..keys.len()).map(|i| keys.shifted(i)).collect();
    match best_insertion::<A>(&shifted) {
        (Some((p, _, mse)), before) if mse >= before => Some(p + keys.first()),
        _ => None,
    }
}

/// The loss-maximizing single poison, or `None` when no free interior
/// integer exists or every candidate lowers the loss.
///
/// Only integers adjacent to a legitimate key are examined; the optimal
/// single poison is always among them.
pub fn single_point_attack(keys: &KeySet) -> Option<u64> {
    with_accum!(keys.precision(1), single_point_generic(keys))
}

fn greedy_generic<A: Accum>(keys: &KeySet, budget: u64) -> (Vec<u64>, f64, f64) {
    let mut points: Vec<u64> = (0..keys.len()).map(|i| keys.shifted(i)).collect();
    let mse_before = SummaryStats::<A>::from_sorted(points.iter().copied()).mse();
    let mut mse_after = mse_before;
    let mut order = Vec::new();
    for _ in 0..budget {
        match best_insertion::<A>(&points) {
            (Some((p, j, mse)), before) if mse >= before => {
                points.insert(j, p);
                order.push(p + keys.first());
                mse_after = mse;
            }
            _ => break,
        }
    }
    (order, mse_before, mse_after)
}

/// Repeats the single-point attack up to `budget` times, each round treating
/// the poisons injected so far as keys. Poisons are reported in insertion
/// order.
pub fn greedy_attack(keys: &KeySet, budget: u64) -> AttackReport {
    let (points, mse_before, mse_after) =
        with_accum!(keys.precision(budget as usize), greedy_generic(keys, budget));
    AttackReport {
        method: AttackMethod::Greedy,
        budget,
        poisons: Poisons::Set { points },
        mse_before,
        mse_after,
    }
}
