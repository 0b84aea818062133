//! Lookups through a fitted line plus exponential search, the access path of
//! a single-model learned index.
//!
//! The searchable array always holds the legitimate keys only: poisoning
//! corrupts the model, not the stored data. Wall-clock means are reported
//! next to probe counts (array comparisons), which are deterministic and
//! machine-independent.

use std::collections::BTreeSet;
use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackMethod};
use crate::datasets::rng;
use crate::error::{Error, Result};
use crate::stats::{fit, merge_sorted, KeySet, RankedMultiset, RegressionFit};

/// 0-based array slot predicted for `key`: the predicted 1-based rank
/// rounded to the nearest integer (ties to even), minus one, clamped to
/// `[0, len−1]`.
pub fn predict_position(fit: &RegressionFit, key: u64, len: usize) -> usize {
    assert!(len > 0, "empty array");
    let rank = fit.predict(key).round_ties_even();
    if rank.is_nan() || rank <= 1.0 {
        0
    } else {
        ((rank - 1.0).min((len - 1) as f64)) as usize
    }
}

/// Index of `key` in `arr` and the number of probes (element comparisons)
/// spent, searching outward from `start` with a doubling bracket and then
/// bisecting the bracket.
pub fn exponential_search(arr: &[u64], start: usize, key: u64) -> Result<(usize, u32)> {
    if arr.is_empty() {
        return Err(Error::KeyNotFound(key));
    }
    let start = start.min(arr.len() - 1);
    let mut probes = 1;
    let here = arr[start];
    if here == key {
        return Ok((start, probes));
    }
    // Invariant: the key, if present, lies in arr[lo..hi].
    let (lo, hi) = if here < key {
        let mut step = 1;
        let mut prev = start;
        loop {
            let idx = start + step;
            if idx >= arr.len() {
                break (prev + 1, arr.len());
            }
            probes += 1;
            if arr[idx] >= key {
                break (prev + 1, idx + 1);
            }
            prev = idx;
            step *= 2;
        }
    } else {
        let mut step = 1;
        let mut prev = start;
        loop {
            if step > start {
                break (0, prev);
            }
            let idx = start - step;
            probes += 1;
            if arr[idx] <= key {
                break (idx, prev);
            }
            prev = idx;
            step *= 2;
        }
    };
    let (idx, p) = binary_search_probes(&arr[lo..hi], key);
    probes += p;
    match idx {
        Some(i) => Ok((lo + i, probes)),
        None => Err(Error::KeyNotFound(key)),
    }
}

/// Classic bisection with a probe counter.
pub fn binary_search_probes(arr: &[u64], key: u64) -> (Option<usize>, u32) {
    let (mut lo, mut hi) = (0, arr.len());
    let mut probes = 0;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        probes += 1;
        match arr[mid].cmp(&key) {
            std::cmp::Ordering::Equal => return (Some(mid), probes),
            std::cmp::Ordering::Less => lo = mid + 1,
            std::cmp::Ordering::Greater => hi = mid,
        }
    }
    (None, probes)
}

/// A sorted key array searched through a linear model.
#[derive(Clone, Debug)]
pub struct LookupIndex<'a> {
    pub keys: &'a [u64],
    pub fit: RegressionFit,
}

impl LookupIndex<'_> {
    pub fn lookup(&self, key: u64) -> Result<(usize, u32)> {
        exponential_search(self.keys, predict_position(&self.fit, key, self.keys.len()), key)
    }
}

/// Timing and probe statistics of one index configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub name: String,
    /// MSE of the model on its own training multiset (`null` for the
    /// binary-search baseline).
    pub mse: Option<f64>,
    pub poisons: usize,
    pub mean_ns: f64,
    pub mean_probes: f64,
    /// Mean `|predicted slot − true slot|` over the legitimate keys.
    pub mean_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub budget: u64,
    pub method: AttackMethod,
    pub reps: u32,
    pub seed: u64,
    pub legit: ConfigStats,
    pub attack: ConfigStats,
    pub random: ConfigStats,
    pub binary_search: ConfigStats,
}

/// `count` distinct integers drawn uniformly from the free interior of
/// `(k_1, k_n)`; fewer when the interior has fewer free slots.
pub fn random_poisons(keys: &KeySet, count: u64, seed: u64) -> Vec<u64> {
    let count = count.min(keys.free_interior());
    let mut rng = rng(seed);
    let mut out = BTreeSet::new();
    while (out.len() as u64) < count {
        let x = rng.gen_range(keys.first() + 1..keys.last());
        if !keys.contains(x) {
            out.insert(x);
        }
    }
    out.into_iter().collect()
}

fn fit_poisoned(keys: &KeySet, poisons: &[u64]) -> Result<RegressionFit> {
    let mut p = poisons.to_vec();
    p.sort_unstable();
    Ok(fit(&RankedMultiset::new(merge_sorted(keys.keys(), &p))?))
}

fn measure(name: &str, keys: &[u64], fit: RegressionFit, poisons: usize, reps: u32) -> Result<ConfigStats> {
    let index = LookupIndex { keys, fit };
    let mut probes = 0u64;
    let mut abs_err = 0u64;
    for (i, &k) in keys.iter().enumerate() {
        let (found, p) = index.lookup(k)?;
        if found != i {
            return Err(Error::KeyNotFound(k));
        }
        probes += p as u64;
        abs_err += predict_position(&fit, k, keys.len()).abs_diff(i) as u64;
    }
    let mut total_ns = 0u128;
    for _ in 0..reps {
        let t = Instant::now();
        for &k in keys {
            let (found, _) = index.lookup(black_box(k))?;
            black_box(found);
        }
        total_ns += t.elapsed().as_nanos();
    }
    let n = keys.len() as f64;
    Ok(ConfigStats {
        name: name.into(),
        mse: Some(fit.mse),
        poisons,
        mean_ns: total_ns as f64 / (reps as f64 * n),
        mean_probes: probes as f64 / n,
        mean_abs_error: abs_err as f64 / n,
    })
}

fn measure_binary(keys: &[u64], reps: u32) -> Result<ConfigStats> {
    let mut probes = 0u64;
    for (i, &k) in keys.iter().enumerate() {
        match binary_search_probes(keys, k) {
            (Some(j), p) if j == i => probes += p as u64,
            _ => return Err(Error::KeyNotFound(k)),
        }
    }
    let mut total_ns = 0u128;
    for _ in 0..reps {
        let t = Instant::now();
        for &k in keys {
            black_box(binary_search_probes(keys, black_box(k)));
        }
        total_ns += t.elapsed().as_nanos();
    }
    let n = keys.len() as f64;
    Ok(ConfigStats {
        name: "binary_search".into(),
        mse: None,
        poisons: 0,
        mean_ns: total_ns as f64 / (reps as f64 * n),
        mean_probes: probes as f64 / n,
        mean_abs_error: 0.0,
    })
}

/// Looks up every legitimate key `reps` times through four indexes: the
/// clean fit, the fit poisoned by `method`, a fit poisoned by as many
/// uniformly random keys (drawn with `seed`), and plain binary search.
/// Every lookup is checked to return the true slot.
pub fn run_bench(keys: &KeySet, budget: u64, method: AttackMethod, reps: u32, seed: u64, limit: u128) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    let arr = keys.keys();
    let legit_fit = fit(&RankedMultiset::new(arr.to_vec())?);
    let report = run_attack(keys, method, budget, limit)?;
    let attack_poisons = report.poisons.materialize(keys);
    let attack_fit = fit_poisoned(keys, &attack_poisons)?;
    let random = random_poisons(keys, attack_poisons.len() as u64, seed);
    let random_fit = fit_poisoned(keys, &random)?;
    Ok(BenchReport {
        n: arr.len(),
        budget,
        method,
        reps,
        seed,
        legit: measure("legit", arr, legit_fit, 0, reps)?,
        attack: measure("attack", arr, attack_fit, attack_poisons.len(), reps)?,
        random: measure("random", arr, random_fit, random.len(), reps)?,
        binary_search: measure_binary(arr, reps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_predicts_exactly() {
        let f = RegressionFit { w: 1.0, b: 1.0, mse: 0.0 };
        assert_eq!(predict_position(&f, 1, 3), 1);
        assert_eq!(predict_position(&f, 1_000_000, 3), 2);
        let neg = RegressionFit { w: -1.0, b: 0.0, mse: 0.0 };
        assert_eq!(predict_position(&neg, 5, 3), 0);
    }

    #[test]
    fn ties_round_to_even() {
        // rank 2.5 → 2 → slot 1; rank 3.5 → 4 → slot 3
        let f = RegressionFit { w: 1.0, b: 0.5, mse: 0.0 };
        assert_eq!(predict_position(&f, 2, 10), 1);
        assert_eq!(predict_position(&f, 3, 10), 3);
    }

    #[test]
    fn exact_start_costs_one_probe() {
        let arr = [1, 5, 9, 14];
        assert_eq!(exponential_search(&arr, 2, 9).unwrap(), (2, 1));
    }

    #[test]
    fn far_key_within_doubling_bound() {
        let arr: Vec<u64> = (0..1000).map(|i| 3 * i).collect();
        let (i, probes) = exponential_search(&arr, 0, 2997).unwrap();
        assert_eq!(i, 999);
        assert!(probes <= 2 * 10 + 2, "{probes}");
        let (i, _) = exponential_search(&arr, 999, 0).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn missing_key() {
        assert!(matches!(exponential_search(&[1, 3, 5], 1, 4), Err(Error::KeyNotFound(4))));
        assert!(matches!(exponential_search(&[1, 3, 5], 0, 9), Err(Error::KeyNotFound(9))));
    }

    #[test]
    fn random_poisons_are_valid() {
        let k = KeySet::new(vec![0, 5, 10]).unwrap();
        let p = random_poisons(&k, 100, 1);
        assert_eq!(p, vec![1, 2, 3, 4, 6, 7, 8, 9]);
    }

    #[test]
    fn zero_budget_attack_matches_legit() {
        let k = KeySet::new(vec![2, 11, 13, 19, 32, 36, 39]).unwrap();
        let r = run_bench(&k, 0, AttackMethod::Greedy, 2, 0, 1000).unwrap();
        assert_eq!(r.legit.mean_probes, r.attack.mean_probes);
        assert_eq!(r.legit.mse, r.attack.mse);
    }
}
