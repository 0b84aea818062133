//! Poisoning attacks on linear regression over cumulative distribution
//! functions, the model underlying learned indexes.
//!
//! A sorted key set `K` is fitted by least squares against its ranks. An
//! attacker inserts up to `λ` poison keys to maximize the fit's mean squared
//! error. This crate provides the attacks (single-point, greedy, Seg+E and
//! exhaustive optimal search in both the original and relaxed settings), a
//! provable upper bound on any attack's impact, dataset tooling, and a
//! lookup benchmark that turns model error into search cost.
//!
//! All statistics are accumulated exactly (128-bit integers, or compensated
//! floating point for very wide key ranges), so every code path produces
//! bit-identical losses for the same multiset of keys.

pub mod attack;
pub mod bound;
pub mod datasets;
pub mod error;
pub mod experiment;
pub mod lookup;
pub mod roots;
pub mod sege;
pub mod stats;

pub use attack::{
    greedy_attack, optimal_attack, optimal_attack_bruteforce, optimal_attack_relaxed, run_attack,
    single_point_attack, AttackMethod, AttackReport, PoisonCounts, PoisonSet, Poisons,
};
pub use bound::{upper_bound, BoundMethod, BoundResult, PiecewiseQuadratic, QuadraticFn};
pub use error::{Error, Result};
pub use sege::{sege_exact_original, sege_exact_relaxed, sege_heuristic_original};
pub use stats::{fit, fit_with_poison, mse_with_extra, KeySet, RankedMultiset, RegressionFit, SummaryStats};
