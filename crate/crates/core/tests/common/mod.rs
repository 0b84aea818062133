//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use cdfpoison::bound::QuadraticFn;
use cdfpoison::{mse_with_extra, KeySet};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Textbook two-pass least-squares MSE of ranks `1..=m` on sorted values.
pub fn textbook_mse(values: &[u64]) -> f64 {
    let m = values.len() as f64;
    let mx = values.iter().map(|&v| v as f64).sum::<f64>() / m;
    let mr = (m + 1.0) / 2.0;
    let (mut sxx, mut sxr, mut srr) = (0.0, 0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let dx = v as f64 - mx;
        let dr = (i + 1) as f64 - mr;
        sxx += dx * dx;
        sxr += dx * dr;
        srr += dr * dr;
    }
    (srr - sxr * sxr / sxx) / m
}

pub fn with_extra(keys: &KeySet, extra: &[u64]) -> Vec<u64> {
    let mut v = keys.keys().to_vec();
    v.extend_from_slice(extra);
    v.sort_unstable();
    v
}

pub fn free_interior(keys: &KeySet) -> Vec<u64> {
    (keys.first() + 1..keys.last()).filter(|x| !keys.contains(*x)).collect()
}

/// Best loss over at most one poison, by trying every free interior integer.
pub fn brute_single(keys: &KeySet) -> f64 {
    free_interior(keys).into_iter().map(|x| mse_with_extra(keys, &[x])).fold(mse_with_extra(keys, &[]), f64::max)
}

/// Best relaxed loss over every count vector with `Σd ≤ budget`.
pub fn relaxed_unsaturated(keys: &KeySet, budget: u64) -> f64 {
    fn rec(keys: &KeySet, i: usize, left: u64, cur: &mut Vec<u64>, best: &mut f64) {
        if i == keys.len() {
            *best = best.max(mse_with_extra(keys, cur));
            return;
        }
        for c in 0..=left {
            cur.extend(std::iter::repeat_n(keys.keys()[i], c as usize));
            rec(keys, i + 1, left - c, cur, best);
            cur.truncate(cur.len() - c as usize);
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(keys, 0, budget, &mut Vec::new(), &mut best);
    best
}

/// `a` copies of `k_1`, `b` of `k_i`, the rest of `k_n`.
pub fn abi_extra(keys: &KeySet, a: u64, b: u64, i: usize, budget: u64) -> Vec<u64> {
    let k = keys.keys();
    let mut v = vec![k[0]; a as usize];
    v.extend(vec![k[i]; b as usize]);
    v.extend(vec![k[k.len() - 1]; (budget - a - b) as usize]);
    v
}

/// Maximum over every `b` of the `(a, b, i)` allocation loss.
pub fn scan_b(keys: &KeySet, a: u64, i: usize, budget: u64) -> f64 {
    (0..=budget - a).map(|b| mse_with_extra(keys, &abi_extra(keys, a, b, i, budget))).fold(f64::NEG_INFINITY, f64::max)
}

pub fn pointwise_max(fns: &[QuadraticFn], w: f64) -> f64 {
    fns.iter().map(|f| f.a2 * w * w + f.a1 * w + f.a0).fold(f64::NEG_INFINITY, f64::max)
}

/// `n ∈ [2, max_n]` distinct keys drawn from `[0, D]` with a random
/// `D ≤ max_domain`.
pub fn random_keys(rng: &mut ChaCha8Rng, max_n: usize, max_domain: u64) -> KeySet {
    let n = rng.gen_range(2..=max_n);
    let domain = rng.gen_range(n as u64 - 1..=max_domain);
    let mut keys: Vec<u64> = sample(rng, domain as usize + 1, n).into_iter().map(|x| x as u64).collect();
    keys.sort_unstable();
    KeySet::new(keys).unwrap()
}

/// Sorted poison sets of at most `budget` free interior integers.
pub fn subsets(keys: &KeySet, budget: u64) -> Vec<Vec<u64>> {
    let cands = free_interior(keys);
    let mut out = vec![Vec::new()];
    fn rec(c: &[u64], start: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            return;
        }
        for i in start..c.len() {
            cur.push(c[i]);
            out.push(cur.clone());
            rec(c, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(&cands, 0, budget, &mut Vec::new(), &mut out);
    out
}

pub fn rel_le(a: f64, b: f64, rel: f64) -> bool {
    a <= b + rel * b.abs().max(a.abs())
}
