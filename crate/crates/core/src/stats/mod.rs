//! Least-squares statistics for fitting a line to (key, rank) pairs.
//!
//! Ranks are 1-based: the i-th smallest element of a multiset has rank i.
//! Keys are shifted by the smallest key before any accumulation; the optimal
//! slope and MSE are invariant under that translation.

mod accum;
mod prefix;

pub use accum::{Accum, DoubleF64, Precision};
pub(crate) use accum::with_accum;
pub use prefix::{poisoned_moments, PoisonedMoments, PrefixSums};

use serde::{Deserialize, Serialize};

use crate::attack::PoisonSet;
use crate::error::{Error, Result};

/// Sorted, distinct legitimate keys with at least two elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct KeySet {
    keys: Vec<u64>,
}

impl KeySet {
    pub fn new(keys: Vec<u64>) -> Result<Self> {
        if let Some(pos) = keys.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedKeys(pos + 1));
        }
        if keys.len() < 2 {
            return Err(Error::DegenerateInput);
        }
        Ok(KeySet { keys })
    }

    /// Sorts and deduplicates arbitrary input.
    pub fn from_unsorted(mut keys: Vec<u64>) -> Result<Self> {
        keys.sort_unstable();
        keys.dedup();
        KeySet::new(keys)
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn first(&self) -> u64 {
        self.keys[0]
    }

    pub fn last(&self) -> u64 {
        self.keys[self.keys.len() - 1]
    }

    /// `k_n − k_1`.
    pub fn span(&self) -> u64 {
        self.last() - self.first()
    }

    /// Key `i` translated so that the smallest key is zero.
    #[inline]
    pub fn shifted(&self, i: usize) -> u64 {
        self.keys[i] - self.keys[0]
    }

    pub fn contains(&self, key: u64) -> bool {
        self.keys.binary_search(&key).is_ok()
    }

    /// Number of integers strictly between the extremes not occupied by a key.
    pub fn free_interior(&self) -> u64 {
        self.span() + 1 - self.keys.len() as u64
    }

    /// Accumulator able to hold moments of this set plus `extra` more points.
    pub fn precision(&self, extra: usize) -> Precision {
        Precision::for_span(self.span(), self.keys.len() + extra)
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.keys
    }
}

impl<'de> Deserialize<'de> for KeySet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let keys = Vec::<u64>::deserialize(d)?;
        KeySet::new(keys).map_err(serde::de::Error::custom)
    }
}

/// Non-decreasing multiset of keys with at least two distinct values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedMultiset {
    values: Vec<u64>,
}

impl RankedMultiset {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if let Some(pos) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::UnsortedKeys(pos + 1));
        }
        match (values.first(), values.last()) {
            (Some(a), Some(b)) if a != b => Ok(RankedMultiset { values }),
            _ => Err(Error::DegenerateInput),
        }
    }

    pub fn from_unsorted(mut values: Vec<u64>) -> Result<Self> {
        values.sort_unstable();
        RankedMultiset::new(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Optimal line `rank ≈ w·key + b` and its mean squared error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub w: f64,
    pub b: f64,
    pub mse: f64,
}

impl RegressionFit {
    pub fn predict(&self, key: u64) -> f64 {
        self.w * key as f64 + self.b
    }
}

/// Running sums over (shifted key, rank) pairs of a sorted multiset.
///
/// Elements must be appended in non-decreasing order; the next element
/// receives rank `m + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryStats<A = i128> {
    pub m: u64,
    pub sum_x: A,
    pub sum_x2: A,
    pub sum_xr: A,
}

impl<A: Accum> Default for SummaryStats<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A: Accum> SummaryStats<A> {
    pub fn new() -> Self {
        SummaryStats { m: 0, sum_x: A::zero(), sum_x2: A::zero(), sum_xr: A::zero() }
    }

    pub fn from_sorted<I: IntoIterator<Item = u64>>(shifted: I) -> Self {
        let mut s = Self::new();
        for x in shifted {
            s.push(x);
        }
        s
    }

    #[inline]
    pub fn push(&mut self, x: u64) {
        let xa = A::from_u64(x);
        self.m += 1;
        self.sum_x = self.sum_x + xa;
        self.sum_x2 = self.sum_x2 + xa * xa;
        self.sum_xr = self.sum_xr + xa * A::from_u64(self.m);
    }

    /// Appends `count` copies of `x`.
    #[inline]
    pub fn push_copies(&mut self, x: u64, count: u64) {
        if count == 0 {
            return;
        }
        let xa = A::from_u64(x);
        let k = A::from_u64(count);
        let c = self.m as u128;
        let k128 = count as u128;
        // ranks c+1 ..= c+count
        let rank_sum = A::from_u128(k128 * c + k128 * (k128 + 1) / 2);
        self.m += count;
        self.sum_x = self.sum_x + k * xa;
        self.sum_x2 = self.sum_x2 + k * xa * xa;
        self.sum_xr = self.sum_xr + xa * rank_sum;
    }

    /// Appends the consecutive integers `start, start+1, ..., start+len−1`.
    #[inline]
    pub fn push_run(&mut self, start: u64, len: u64) {
        if len == 0 {
            return;
        }
        let s = A::from_u64(start);
        let l = len as u128;
        let c1 = self.m as u128 + 1;
        let tri = A::from_u128(l * (l - 1) / 2); // Σ t, t < len
        let sq = A::from_u128((l - 1) * l * (2 * l - 1) / 6); // Σ t²
        let la = A::from_u64(len);
        let two = A::from_u64(2);
        // Σ (s+t), Σ (s+t)², Σ (s+t)(c+1+t)
        let sx = la * s + tri;
        let sxx = la * s * s + two * s * tri + sq;
        let sxr = s * (A::from_u128(l * c1) + tri) + A::from_u128(c1) * tri + sq;
        self.m += len;
        self.sum_x = self.sum_x + sx;
        self.sum_x2 = self.sum_x2 + sxx;
        self.sum_xr = self.sum_xr + sxr;
    }

    /// `m·Σxr − Σx·Σr`, i.e. `m²·Cov_XR`.
    #[inline]
    pub fn cov_num(&self) -> A {
        let m = self.m as u128;
        A::from_u64(self.m) * self.sum_xr - self.sum_x * A::from_u128(m * (m + 1) / 2)
    }

    /// `m·Σx² − (Σx)²`, i.e. `m²·Var_X`.
    #[inline]
    pub fn var_num(&self) -> A {
        A::from_u64(self.m) * self.sum_x2 - self.sum_x * self.sum_x
    }

    /// Minimal MSE of a line through the accumulated points.
    #[inline]
    pub fn mse(&self) -> f64 {
        A::mse(self.m, self.cov_num(), self.var_num())
    }

    /// Full fit in original key units, given the shift applied to the keys.
    pub fn fit(&self, shift: u64) -> RegressionFit {
        let m = self.m as f64;
        let w = self.cov_num().to_f64() / self.var_num().to_f64();
        let mean_x = shift as f64 + self.sum_x.to_f64() / m;
        let mean_r = (m + 1.0) / 2.0;
        RegressionFit { w, b: mean_r - w * mean_x, mse: self.mse() }
    }
}

fn fit_sorted<A: Accum>(values: &[u64]) -> RegressionFit {
    let shift = values[0];
    SummaryStats::<A>::from_sorted(values.iter().map(|&v| v - shift)).fit(shift)
}

/// Closed-form least-squares fit of ranks on keys.
pub fn fit(values: &RankedMultiset) -> RegressionFit {
    let v = values.values();
    let precision = Precision::for_span(v[v.len() - 1] - v[0], v.len());
    with_accum!(precision, fit_sorted(v))
}

/// Fit over the sorted union `K ∪ P`.
pub fn fit_with_poison(keys: &KeySet, poisons: &PoisonSet) -> RegressionFit {
    let merged = merge_sorted(keys.keys(), poisons.points());
    let precision = keys.precision(poisons.len());
    with_accum!(precision, fit_sorted(&merged))
}

/// MSE of `K ⊎ extra` for an arbitrary (possibly unsorted, possibly
/// duplicated) list of extra keys inside `[k_1, k_n]`.
pub fn mse_with_extra(keys: &KeySet, extra: &[u64]) -> f64 {
    let mut extra = extra.to_vec();
    extra.sort_unstable();
    let merged = merge_sorted(keys.keys(), &extra);
    let precision = keys.precision(extra.len());
    with_accum!(precision, fit_sorted(&merged)).mse
}

pub(crate) fn merge_sorted(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
