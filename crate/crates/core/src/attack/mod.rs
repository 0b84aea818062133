//! Poisoning attacks in the original (distinct integer) and relaxed
//! (multiset over the keys) settings.

mod greedy;
mod optimal;

pub use greedy::{greedy_attack, single_point_attack};
pub use optimal::{
    binomial, optimal_attack, optimal_attack_bruteforce, optimal_attack_relaxed, DEFAULT_LIMIT,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::KeySet;

/// Sorted, distinct poison keys lying strictly between `k_1` and `k_n` and
/// disjoint from the legitimate keys.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoisonSet {
    points: Vec<u64>,
}

impl PoisonSet {
    pub fn new(keys: &KeySet, mut points: Vec<u64>) -> Result<Self> {
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPoison(w[0]));
        }
        if let Some(&p) = points
            .iter()
            .find(|&&p| p <= keys.first() || p >= keys.last() || keys.contains(p))
        {
            return Err(Error::InvalidPoison(p));
        }
        Ok(PoisonSet { points })
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Relaxed-setting attack: `d[i]` extra copies of key `k_i`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoisonCounts {
    pub d: Vec<u64>,
}

impl PoisonCounts {
    pub fn total(&self) -> u64 {
        self.d.iter().sum()
    }

    /// Expands to the multiset of poison keys, sorted.
    pub fn expand(&self, keys: &KeySet) -> Vec<u64> {
        self.d
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(keys.keys()[i], c as usize))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMethod {
    Single,
    Greedy,
    SegeExact,
    SegeHeuristic,
    SegeRelaxed,
    Optimal,
    OptimalRelaxed,
    Bruteforce,
}

impl AttackMethod {
    pub const ALL: [AttackMethod; 8] = [
        AttackMethod::Single,
        AttackMethod::Greedy,
        AttackMethod::SegeExact,
        AttackMethod::SegeHeuristic,
        AttackMethod::SegeRelaxed,
        AttackMethod::Optimal,
        AttackMethod::OptimalRelaxed,
        AttackMethod::Bruteforce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackMethod::Single => "single",
            AttackMethod::Greedy => "greedy",
            AttackMethod::SegeExact => "sege_exact",
            AttackMethod::SegeHeuristic => "sege_heuristic",
            AttackMethod::SegeRelaxed => "sege_relaxed",
            AttackMethod::Optimal => "optimal",
            AttackMethod::OptimalRelaxed => "optimal_relaxed",
            AttackMethod::Bruteforce => "bruteforce",
        }
    }
}

impl fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        AttackMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown attack method `{s}`")))
    }
}

/// What an attack injects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Poisons {
    /// Distinct integers, in insertion order for greedy attacks and sorted
    /// otherwise.
    Set { points: Vec<u64> },
    /// Extra copies per legitimate key.
    Counts { d: Vec<u64> },
    /// `a` copies of `k_1`, `b` copies of the interior key `p`, `c` copies of `k_n`.
    SegeRelaxed { a: u64, b: u64, c: u64, p: u64, index: usize },
}

impl Poisons {
    pub fn len(&self) -> u64 {
        match self {
            Poisons::Set { points } => points.len() as u64,
            Poisons::Counts { d } => d.iter().sum(),
            Poisons::SegeRelaxed { a, b, c, .. } => a + b + c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Poison keys as a sorted list (with repetition in the relaxed setting).
    pub fn materialize(&self, keys: &KeySet) -> Vec<u64> {
        let mut out = match self {
            Poisons::Set { points } => points.clone(),
            Poisons::Counts { d } => PoisonCounts { d: d.clone() }.expand(keys),
            Poisons::SegeRelaxed { a, b, c, p, .. } => {
                let mut v = vec![keys.first(); *a as usize];
                v.extend(std::iter::repeat_n(*p, *b as usize));
                v.extend(std::iter::repeat_n(keys.last(), *c as usize));
                v
            }
        };
        out.sort_unstable();
        out
    }
}

/// Outcome of running one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub method: AttackMethod,
    pub budget: u64,
    pub poisons: Poisons,
    pub mse_before: f64,
    pub mse_after: f64,
}

impl AttackReport {
    /// Poison points for original-setting reports, `None` for relaxed ones.
    pub fn points(&self) -> Option<&[u64]> {
        match &self.poisons {
            Poisons::Set { points } => Some(points),
            _ => None,
        }
    }

    pub fn sorted_points(&self) -> Option<Vec<u64>> {
        self.points().map(|p| {
            let mut p = p.to_vec();
            p.sort_unstable();
            p
        })
    }
}

/// Runs `method` with `budget` poisons. `limit` caps the enumeration size
/// of the exhaustive methods.
pub fn run_attack(keys: &KeySet, method: AttackMethod, budget: u64, limit: u128) -> Result<AttackReport> {
    match method {
        AttackMethod::Single => Ok(AttackReport { method, ..greedy_attack(keys, budget.min(1)) }),
        AttackMethod::Greedy => Ok(greedy_attack(keys, budget)),
        AttackMethod::SegeExact => crate::sege::sege_exact_original(keys, budget),
        AttackMethod::SegeHeuristic => crate::sege::sege_heuristic_original(keys, budget),
        AttackMethod::SegeRelaxed => crate::sege::sege_exact_relaxed(keys, budget),
        AttackMethod::Optimal => optimal_attack(keys, budget, limit),
        AttackMethod::OptimalRelaxed => optimal_attack_relaxed(keys, budget, limit),
        AttackMethod::Bruteforce => optimal_attack_bruteforce(keys, budget, limit),
    }
}
