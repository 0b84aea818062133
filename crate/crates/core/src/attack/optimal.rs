use rayon::prelude::*;

use super::{AttackMethod, AttackReport, Poisons};
use crate::error::{Error, Result};
use crate::stats::{mse_with_extra, with_accum, Accum, KeySet, PrefixSums, SummaryStats};

/// Default cap on enumerated candidates.
pub const DEFAULT_LIMIT: u128 = 10_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i)/(i+1) stays integral at every step
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

fn guard(count: u128, limit: u128) -> Result<()> {
    if count > limit {
        Err(Error::SearchSpaceTooLarge { count, limit })
    } else {
        Ok(())
    }
}

/// Running maximum with ties going to the lexicographically smallest sorted
/// poison sequence.
#[derive(Clone, Debug)]
struct Best {
    mse: f64,
    points: Vec<u64>,
}

impl Best {
    fn offer(&mut self, mse: f64, points: impl FnOnce() -> Vec<u64>) {
        if mse > self.mse {
            self.mse = mse;
            self.points = points();
        } else if mse == self.mse {
            let p = points();
            if p < self.points {
                self.points = p;
            }
        }
    }

    fn merge(mut self, other: Best) -> Best {
        let Best { mse, points } = other;
        self.offer(mse, || points);
        self
    }
}

/// Depth-first enumeration of block allocations. `alloc[g]` holds the
/// `(right, left)` block lengths of gap `g`, i.e. the poisons attached to the
/// right of `k_g` and to the left of `k_{g+1}`.
struct Dfs<'a, A> {
    keys: &'a KeySet,
    ps: PrefixSums<A>,
    alloc: Vec<(u64, u64)>,
    best: Best,
}

impl<A: Accum> Dfs<'_, A> {
    fn materialize(&self) -> Vec<u64> {
        let k = self.keys.keys();
        let mut out = Vec::new();
        for (g, &(r, l)) in self.alloc.iter().enumerate() {
            out.extend(k[g] + 1..=k[g] + r);
            out.extend(k[g + 1] - l..k[g + 1]);
        }
        out
    }

    /// `stats` covers keys `0..=g` plus every poison below `k_g`.
    fn visit(&mut self, g: usize, stats: SummaryStats<A>, remaining: u64) {
        let n = self.keys.len();
        if remaining == 0 || g + 1 == n {
            // Append the untouched suffix k_{g+1..n} with ranks shifted by
            // the poisons placed so far.
            let shift = A::from_u64(stats.m - (g as u64 + 1));
            let ps = &self.ps;
            let sx = ps.s[n] - ps.s[g + 1];
            let full = SummaryStats {
                m: stats.m + (n - g - 1) as u64,
                sum_x: stats.sum_x + sx,
                sum_x2: stats.sum_x2 + (ps.t[n] - ps.t[g + 1]),
                sum_xr: stats.sum_xr + (ps.u[n] - ps.u[g + 1]) + shift * sx,
            };
            let mse = full.mse();
            if mse >= self.best.mse {
                let points = self.materialize();
                self.best.offer(mse, || points);
            }
            return;
        }
        let lo = self.keys.shifted(g);
        let hi = self.keys.shifted(g + 1);
        let free = hi - lo - 1;
        let saved = self.alloc[g];
        for r in 0..=free.min(remaining) {
            for l in 0..=(free - r).min(remaining - r) {
                // A filled gap is the same set for every split; keep r = free.
                if r + l == free && l > 0 {
                    continue;
                }
                let mut s = stats;
                s.push_run(lo + 1, r);
                s.push_run(hi - l, l);
                s.push(hi);
                self.alloc[g] = (r, l);
                self.visit(g + 1, s, remaining - r - l);
            }
        }
        self.alloc[g] = saved;
    }
}

fn optimal_generic<A: Accum>(keys: &KeySet, budget: u64) -> (Vec<u64>, f64) {
    let n = keys.len();
    let ps = PrefixSums::<A>::new(keys);
    // Stats of the clean prefix k_0..=k_g.
    let clean = |g: usize| SummaryStats { m: g as u64 + 1, sum_x: ps.s[g + 1], sum_x2: ps.t[g + 1], sum_xr: ps.u[g + 1] };
    let empty_mse = clean(n - 1).mse();

    // One task per (first gap receiving poison, its block lengths), which
    // balances far better than splitting on the first gap alone.
    let mut tasks = Vec::new();
    for g in 0..n - 1 {
        let free = keys.shifted(g + 1) - keys.shifted(g) - 1;
        for r in 0..=free.min(budget) {
            for l in 0..=(free - r).min(budget - r) {
                if r + l == 0 || (r + l == free && l > 0) {
                    continue;
                }
                tasks.push((g, r, l));
            }
        }
    }
    let init = Best { mse: empty_mse, points: Vec::new() };
    let best = tasks
        .into_par_iter()
        .map(|(g, r, l)| {
            let mut dfs = Dfs {
                keys,
                ps: ps.clone(),
                alloc: vec![(0, 0); n - 1],
                best: Best { mse: f64::NEG_INFINITY, points: Vec::new() },
            };
            let mut s = clean(g);
            s.push_run(keys.shifted(g) + 1, r);
            s.push_run(keys.shifted(g + 1) - l, l);
            s.push(keys.shifted(g + 1));
            dfs.alloc[g] = (r, l);
            dfs.visit(g + 1, s, budget - r - l);
            dfs.best
        })
        .reduce(|| Best { mse: f64::NEG_INFINITY, points: Vec::new() }, Best::merge);
    let best = init.merge(best);
    (best.points, empty_mse)
}

/// Optimal original-setting attack with at most `budget` poisons.
///
/// Only poisons chained to a legitimate key through neighbouring poisons
/// need to be considered, so the search runs over per-gap pairs of blocks
/// attached to the two bounding keys: at most `C(2n−2+λ, λ)` allocations,
/// which must not exceed `limit`.
pub fn optimal_attack(keys: &KeySet, budget: u64, limit: u128) -> Result<AttackReport> {
    let n = keys.len() as u64;
    guard(binomial(2 * n - 2 + budget, budget), limit)?;
    let (points, mse_before) = with_accum!(keys.precision(budget as usize), optimal_generic(keys, budget));
    let mse_after = mse_with_extra(keys, &points);
    Ok(AttackReport { method: AttackMethod::Optimal, budget, poisons: Poisons::Set { points }, mse_before, mse_after })
}

/// Exhaustive search over every subset of at most `budget` free interior
/// integers. Exponential; intended for validating [`optimal_attack`].
pub fn optimal_attack_bruteforce(keys: &KeySet, budget: u64, limit: u128) -> Result<AttackReport> {
    let free = keys.free_interior();
    let take = budget.min(free);
    let count = (0..=take).fold(0u128, |acc, j| acc.saturating_add(binomial(free, j)));
    guard(count, limit)?;
    let candidates: Vec<u64> =
        (keys.first() + 1..keys.last()).filter(|&x| !keys.contains(x)).collect();

    fn rec(keys: &KeySet, cands: &[u64], start: usize, left: u64, cur: &mut Vec<u64>, best: &mut Best) {
        let mse = mse_with_extra(keys, cur);
        best.offer(mse, || cur.clone());
        if left == 0 {
            return;
        }
        for i in start..cands.len() {
            cur.push(cands[i]);
            rec(keys, cands, i + 1, left - 1, cur, best);
            cur.pop();
        }
    }

    let mut best = Best { mse: f64::NEG_INFINITY, points: Vec::new() };
    rec(keys, &candidates, 0, take, &mut Vec::new(), &mut best);
    let mse_before = mse_with_extra(keys, &[]);
    Ok(AttackReport {
        method: AttackMethod::Bruteforce,
        budget,
        poisons: Poisons::Set { points: best.points },
        mse_before,
        mse_after: best.mse,
    })
}

struct RelaxedDfs<'a> {
    keys: &'a KeySet,
    d: Vec<u64>,
    best_mse: f64,
    best_d: Vec<u64>,
}

impl RelaxedDfs<'_> {
    fn visit<A: Accum>(&mut self, i: usize, stats: SummaryStats<A>, remaining: u64) {
        let n = self.keys.len();
        let x = self.keys.shifted(i);
        if i + 1 == n {
            let mut s = stats;
            s.push_copies(x, remaining + 1);
            self.d[i] = remaining;
            let mse = s.mse();
            // Larger counts are tried first, so strict improvement keeps the
            // allocation with the larger d at the first difference.
            if mse > self.best_mse {
                self.best_mse = mse;
                self.best_d.clone_from(&self.d);
            }
            self.d[i] = 0;
            return;
        }
        for c in (0..=remaining).rev() {
            let mut s = stats;
            s.push_copies(x, c + 1);
            self.d[i] = c;
            self.visit(i + 1, s, remaining - c);
        }
        self.d[i] = 0;
    }
}

fn relaxed_generic<A: Accum>(keys: &KeySet, budget: u64) -> (Vec<u64>, f64) {
    let mut dfs =
        RelaxedDfs { keys, d: vec![0; keys.len()], best_mse: f64::NEG_INFINITY, best_d: Vec::new() };
    dfs.visit(0, SummaryStats::<A>::new(), budget);
    (dfs.best_d, dfs.best_mse)
}

/// Optimal relaxed-setting attack: extra copies of legitimate keys, with
/// the whole budget spent (an optimum always saturates it). Enumerates the
/// `C(n+λ−1, λ)` allocations, which must not exceed `limit`.
pub fn optimal_attack_relaxed(keys: &KeySet, budget: u64, limit: u128) -> Result<AttackReport> {
    let n = keys.len() as u64;
    guard(binomial(n + budget - 1, budget), limit)?;
    let (d, mse_after) = with_accum!(keys.precision(budget as usize), relaxed_generic(keys, budget));
    Ok(AttackReport {
        method: AttackMethod::OptimalRelaxed,
        budget,
        poisons: Poisons::Counts { d },
        mse_before: mse_with_extra(keys, &[]),
        mse_after,
    })
}
