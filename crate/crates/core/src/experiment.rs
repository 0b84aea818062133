//! Ratio experiments: every attack and the upper bound on a grid of seeds and
//! poisoning percentages.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{greedy_attack, optimal_attack, optimal_attack_relaxed, DEFAULT_LIMIT};
use crate::bound::{upper_bound, BoundMethod, DEFAULT_ITERS};
use crate::datasets::{generate, load_slice, Distribution, KeyFormat, SliceSpec, SynthSpec};
use crate::error::{Error, Result};
use crate::sege::{sege_exact_original, sege_heuristic_original};
use crate::stats::{mse_with_extra, KeySet};

pub const CSV_HEADER: [&str; 14] = [
    "seed", "dataset", "pct", "mse_L", "mse_G", "mse_segE", "mse_segE_H", "mse_OPT", "mse_ROPT", "mse_UB", "rho_G",
    "rho_R", "rho_UB", "error",
];

/// Where each seed's key set comes from. For slices the seed picks the
/// starting position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Synth { distribution: Distribution, range: u64, n: usize },
    Slice { path: PathBuf, n: usize, format: KeyFormat },
}

impl Source {
    pub fn keys(&self, seed: u64) -> Result<KeySet> {
        match self {
            Source::Synth { distribution, range, n } => {
                generate(&SynthSpec { distribution: *distribution, seed, range: *range, n: *n })
            }
            Source::Slice { path, n, format } => {
                load_slice(&SliceSpec { path: path.clone(), n: *n, seed, format: *format })
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Source::Synth { distribution, .. } => distribution.to_string(),
            Source::Slice { path, .. } => {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: Source,
    /// Half-open seed range `[start, end)`.
    pub seeds: (u64, u64),
    /// Poisoning percentages in `(0, 1]`; `λ = round(pct·n)`.
    pub pcts: Vec<f64>,
    /// Enumeration cap for the optimal original-setting attack.
    pub opt_limit: u128,
    /// Enumeration cap for the optimal relaxed attack.
    pub ropt_limit: u128,
    pub iters: u32,
    pub bound_method: BoundMethod,
}

impl ExperimentSpec {
    pub fn new(source: Source, seeds: (u64, u64), pcts: Vec<f64>) -> Self {
        ExperimentSpec {
            source,
            seeds,
            pcts,
            opt_limit: DEFAULT_LIMIT,
            ropt_limit: DEFAULT_LIMIT,
            iters: DEFAULT_ITERS,
            bound_method: BoundMethod::Exact,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.pcts.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidParameter(format!("percentage {p} outside (0, 1]")));
        }
        if self.seeds.0 > self.seeds.1 {
            return Err(Error::InvalidParameter("seed range is reversed".into()));
        }
        Ok(())
    }
}

/// `λ = round(pct·n)`, half away from zero.
pub fn budget_for(pct: f64, n: usize) -> u64 {
    (pct * n as f64).round() as u64
}

/// One `(seed, pct)` cell. Optional values are absent when the enumeration
/// cap was exceeded or the computation failed (see `error`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub seed: u64,
    pub dataset: String,
    pub pct: f64,
    pub n: usize,
    pub budget: u64,
    pub mse_l: Option<f64>,
    pub mse_g: Option<f64>,
    pub mse_sege: Option<f64>,
    pub mse_sege_h: Option<f64>,
    pub mse_opt: Option<f64>,
    pub mse_ropt: Option<f64>,
    pub mse_ub: Option<f64>,
    pub rho_g: Option<f64>,
    pub rho_r: Option<f64>,
    pub rho_ub: Option<f64>,
    pub error: Option<String>,
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    Some(num? / den?)
}

/// Computes one row. Failures are collected into `error` instead of
/// aborting; an exceeded enumeration cap only leaves its column empty.
pub fn run_row(spec: &ExperimentSpec, seed: u64, pct: f64) -> RatioRow {
    let mut row = RatioRow {
        seed,
        dataset: spec.source.label(),
        pct,
        n: 0,
        budget: 0,
        mse_l: None,
        mse_g: None,
        mse_sege: None,
        mse_sege_h: None,
        mse_opt: None,
        mse_ropt: None,
        mse_ub: None,
        rho_g: None,
        rho_r: None,
        rho_ub: None,
        error: None,
    };
    let keys = match spec.source.keys(seed) {
        Ok(k) => k,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let budget = budget_for(pct, keys.len());
    row.n = keys.len();
    row.budget = budget;
    let mut errors = Vec::new();
    let mut keep = |r: Result<f64>, capped_ok: bool| match r {
        Ok(v) => Some(v),
        Err(Error::SearchSpaceTooLarge { .. }) if capped_ok => None,
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    row.mse_l = Some(mse_with_extra(&keys, &[]));
    row.mse_g = Some(greedy_attack(&keys, budget).mse_after);
    row.mse_sege = keep(sege_exact_original(&keys, budget).map(|r| r.mse_after), false);
    row.mse_sege_h = keep(sege_heuristic_original(&keys, budget).map(|r| r.mse_after), false);
    row.mse_opt = keep(optimal_attack(&keys, budget, spec.opt_limit).map(|r| r.mse_after), true);
    row.mse_ropt = keep(optimal_attack_relaxed(&keys, budget, spec.ropt_limit).map(|r| r.mse_after), true);
    row.mse_ub = keep(upper_bound(&keys, budget, spec.bound_method, spec.iters).map(|r| r.value), false);
    row.rho_g = ratio(row.mse_g, row.mse_opt);
    row.rho_r = ratio(row.mse_opt, row.mse_ropt);
    row.rho_ub = ratio(row.mse_ropt, row.mse_ub);
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// All rows, sorted by `(seed, pct)`. Rows run in parallel.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RatioRow>> {
    spec.validate()?;
    let cells: Vec<(u64, f64)> =
        (spec.seeds.0..spec.seeds.1).flat_map(|s| spec.pcts.iter().map(move |&p| (s, p))).collect();
    let mut rows: Vec<RatioRow> = cells.par_iter().map(|&(s, p)| run_row(spec, s, p)).collect();
    rows.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.pct.total_cmp(&b.pct)));
    Ok(rows)
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Writes rows as CSV under [`CSV_HEADER`]; MSEs and ratios carry 17
/// significant digits.
pub fn write_csv<W: Write>(rows: &[RatioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.dataset.clone(),
            r.pct.to_string(),
            num(r.mse_l),
            num(r.mse_g),
            num(r.mse_sege),
            num(r.mse_sege_h),
            num(r.mse_opt),
            num(r.mse_ropt),
            num(r.mse_ub),
            num(r.rho_g),
            num(r.rho_r),
            num(r.rho_ub),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
