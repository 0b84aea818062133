//! Segment + Endpoint attacks.
//!
//! A Seg+E poison set consists of at most three blocks: one attached to the
//! smallest key, one attached to the largest key and a single interior
//! segment. In the relaxed setting the blocks collapse to copies of `k_1`,
//! `k_n` and one interior key.

mod original;

pub use original::{sege_boundaries, sege_exact_original, sege_heuristic_original, SegEOriginal};

use serde::{Deserialize, Serialize};

use crate::attack::{AttackMethod, AttackReport, Poisons};
use crate::error::{Error, Result};
use crate::roots::cubic_roots;
use crate::stats::{mse_with_extra, with_accum, Accum, KeySet, PrefixSums, SummaryStats};

/// `a` copies of `k_1`, `b` copies of the interior key `k_index` (0-based)
/// and `c` copies of `k_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegERelaxed {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub index: usize,
}

fn stats_abi<A: Accum>(ps: &PrefixSums<A>, a: u64, b: u64, i: usize, budget: u64) -> SummaryStats<A> {
    let n = ps.n();
    ps.with_extras(&[(0, a), (i, b), (n - 1, budget - a - b)])
}

/// Number of copies `b ∈ [0, λ−a]` of the interior key `k_i` (0-based `i`,
/// `1 ≤ i ≤ n−2`) maximizing the MSE when `a` copies go to `k_1` and the rest
/// to `k_n`. Ties go to the smaller `b`.
///
/// With the total count fixed, `m²Cov` and `m²Var` are quadratics `A(b)`,
/// `B(b)` and the MSE is stationary exactly where `2A'B − AB' = 0`, a cubic.
/// The integer maximizer is an endpoint or an integer neighbour of a real
/// root, so at most a handful of candidates are evaluated exactly.
pub fn get_optimal_b<A: Accum>(ps: &PrefixSums<A>, a: u64, i: usize, budget: u64) -> u64 {
    let hi = budget - a;
    let mse_at = |b: u64| stats_abi(ps, a, b, i, budget).mse();
    let mut cands = vec![0, hi];
    if hi >= 2 {
        let s: Vec<SummaryStats<A>> = (0..3).map(|b| stats_abi(ps, a, b, i, budget)).collect();
        let cov: Vec<f64> = s.iter().map(|x| x.cov_num().to_f64()).collect();
        let var: Vec<f64> = s.iter().map(|x| x.var_num().to_f64()).collect();
        let coef = |y: &[f64]| {
            let c2 = (y[2] - 2.0 * y[1] + y[0]) / 2.0;
            (y[0], y[1] - y[0] - c2, c2)
        };
        let (a0, a1, a2) = coef(&cov);
        let (b0, b1, b2) = coef(&var);
        let roots = cubic_roots(2.0 * a2 * b2, 3.0 * a2 * b1, a1 * b1 + 4.0 * a2 * b0 - 2.0 * a0 * b2, 2.0 * a1 * b0 - a0 * b1);
        for r in roots {
            // Rounding may land a root on the wrong side of an integer, so
            // take the neighbours of r ± ε.
            let eps = 1e-6 * r.abs().max(1.0);
            for x in [(r - eps).floor(), (r - eps).ceil(), (r + eps).floor(), (r + eps).ceil()] {
                if x.is_finite() {
                    cands.push(x.clamp(0.0, hi as f64) as u64);
                }
            }
        }
    } else if hi == 1 {
        cands.push(1);
    }
    cands.sort_unstable();
    cands.dedup();
    let mut best = (cands[0], mse_at(cands[0]));
    for &b in &cands[1..] {
        let m = mse_at(b);
        if m > best.1 {
            best = (b, m);
        }
    }
    best.0
}

fn relaxed_generic<A: Accum>(keys: &KeySet, budget: u64) -> (SegERelaxed, f64) {
    let n = keys.len();
    let ps = PrefixSums::<A>::new(keys);
    let mut best = (SegERelaxed { a: 0, b: 0, c: budget, index: 1 }, f64::NEG_INFINITY);
    for a in 0..=budget {
        for i in 1..n - 1 {
            let b = get_optimal_b(&ps, a, i, budget);
            let mse = stats_abi(&ps, a, b, i, budget).mse();
            let cur = &best.0;
            if mse > best.1 || (mse == best.1 && (a, b, i) < (cur.a, cur.b, cur.index)) {
                best = (SegERelaxed { a, b, c: budget - a - b, index: i }, mse);
            }
        }
    }
    best
}

/// Best relaxed Seg+E configuration, always spending the whole budget.
/// Ties resolve to the lexicographically smallest `(a, b, i)`.
pub fn sege_relaxed_config(keys: &KeySet, budget: u64) -> Result<(SegERelaxed, f64)> {
    if keys.len() < 3 {
        return Err(Error::TooFewKeys { needed: 3, got: keys.len() });
    }
    Ok(with_accum!(keys.precision(budget as usize), relaxed_generic(keys, budget)))
}

/// Exact relaxed-setting Seg+E attack in `O(nλ)`.
pub fn sege_exact_relaxed(keys: &KeySet, budget: u64) -> Result<AttackReport> {
    let (cfg, mse_after) = sege_relaxed_config(keys, budget)?;
    Ok(AttackReport {
        method: AttackMethod::SegeRelaxed,
        budget,
        poisons: Poisons::SegeRelaxed { a: cfg.a, b: cfg.b, c: cfg.c, p: keys.keys()[cfg.index], index: cfg.index },
        mse_before: mse_with_extra(keys, &[]),
        mse_after,
    })
}
