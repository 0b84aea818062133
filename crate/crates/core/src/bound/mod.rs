//! Provable upper bound on the MSE any attack with a given budget can reach.
//!
//! Allowing duplicates and swapping the max over poison allocations with the
//! min over the slope gives `min_w max_d min_b L(K ⊎ Q_K(d); w, b)`. For a
//! fixed allocation the inner minimum is the convex quadratic
//! `Var_K'·w² − 2·Cov_K'R'·w + Var_R'`, and for any fixed `w` the maximizing
//! allocation either piles the whole budget on one key or splits it between
//! the two extreme keys. The bound is therefore the minimum of the upper
//! envelope of `O(n + λ)` quadratics.

mod envelope;
mod solvers;

pub use envelope::{upper_envelope, PiecewiseQuadratic};
pub use solvers::{upper_bound_binary, upper_bound_exact, upper_bound_golden};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{with_accum, Accum, KeySet, PrefixSums, SummaryStats};

/// Default iteration count of the golden-section and binary solvers.
pub const DEFAULT_ITERS: u32 = 50;

/// `a2·w² + a1·w + a0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFn {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl QuadraticFn {
    pub fn new(a2: f64, a1: f64, a0: f64) -> Self {
        QuadraticFn { a2, a1, a0 }
    }

    /// Quadratic in `w` whose minimum is the MSE of the accumulated multiset.
    pub fn from_stats<A: Accum>(stats: &SummaryStats<A>) -> Self {
        let m = stats.m as f64;
        let m2 = m * m;
        QuadraticFn {
            a2: stats.var_num().to_f64() / m2,
            a1: -2.0 * stats.cov_num().to_f64() / m2,
            a0: (m2 - 1.0) / 12.0,
        }
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        (self.a2 * w + self.a1) * w + self.a0
    }

    pub fn vertex(&self) -> f64 {
        -self.a1 / (2.0 * self.a2)
    }

    pub fn min_value(&self) -> f64 {
        self.eval(self.vertex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Golden,
    Binary,
    Exact,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 3] = [BoundMethod::Golden, BoundMethod::Binary, BoundMethod::Exact];

    pub fn name(self) -> &'static str {
        match self {
            BoundMethod::Golden => "golden",
            BoundMethod::Binary => "binary",
            BoundMethod::Exact => "exact",
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bound method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub method: BoundMethod,
    pub w_star: f64,
}

fn candidates_generic<A: Accum>(keys: &KeySet, budget: u64) -> Vec<QuadraticFn> {
    let ps = PrefixSums::<A>::new(keys);
    let n = keys.len();
    if budget == 0 {
        return vec![QuadraticFn::from_stats(&ps.with_extras(&[]))];
    }
    let mut out = Vec::with_capacity(n + budget as usize + 1);
    for i in 0..n {
        out.push(QuadraticFn::from_stats(&ps.with_extras(&[(i, budget)])));
    }
    for a in 0..=budget {
        out.push(QuadraticFn::from_stats(&ps.with_extras(&[(0, a), (n - 1, budget - a)])));
    }
    out
}

/// One quadratic per allocation that can maximize the loss for some slope:
/// the whole budget on key `k_i` (`n` functions) and every split `a` /
/// `λ−a` between `k_1` and `k_n` (`λ+1` functions). With a zero budget the
/// single quadratic of `K` itself is returned.
pub fn candidate_quadratics(keys: &KeySet, budget: u64) -> Vec<QuadraticFn> {
    with_accum!(keys.precision(budget as usize), candidates_generic(keys, budget))
}

/// Upper bound on the MSE reachable with `budget` poisons, by any attack in
/// either setting.
pub fn upper_bound(keys: &KeySet, budget: u64, method: BoundMethod, iters: u32) -> Result<BoundResult> {
    let fns = candidate_quadratics(keys, budget);
    match method {
        BoundMethod::Golden => upper_bound_golden(&fns, iters),
        BoundMethod::Binary => upper_bound_binary(&fns, iters, None),
        BoundMethod::Exact => upper_bound_exact(&fns),
    }
}
