//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Every tolerance, instance count and time budget is
//! pinned below.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use cdfpoison::attack::{
    greedy_attack, optimal_attack, optimal_attack_bruteforce, optimal_attack_relaxed, single_point_attack,
};
use cdfpoison::bound::{
    candidate_quadratics, upper_bound, upper_bound_binary, upper_bound_exact, upper_bound_golden, upper_envelope,
    BoundMethod, QuadraticFn,
};
use cdfpoison::datasets::{generate, rng, Distribution, SynthSpec};
use cdfpoison::experiment::budget_for;
use cdfpoison::lookup::run_bench;
use cdfpoison::sege::{get_optimal_b, sege_exact_original, sege_exact_relaxed, sege_heuristic_original};
use cdfpoison::stats::PrefixSums;
use cdfpoison::{mse_with_extra, AttackMethod, KeySet};
use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Writes straight to stdout so the report shows up even when the harness
/// captures test output.
macro_rules! say {
    ($($t:tt)*) => {{
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, $($t)*);
        let _ = out.flush();
    }};
}

fn first<T: std::fmt::Debug>(bad: &[T]) -> String {
    bad.first().map(|b| format!("; first: {b:?}")).unwrap_or_default()
}

/// Relative slack for floating comparisons along the MSE chain.
const CHAIN_REL: f64 = 1e-9;
/// Absolute agreement required between the three min-max solvers.
const SOLVER_ABS: f64 = 1e-9;
/// Relative agreement between the library MSE and the textbook formula.
const TEXTBOOK_REL: f64 = 1e-9;
const SOLVER_ITERS: u32 = 50;
/// `C(2n−2+λ, λ)` reaches 8.8e7 at n = 50, λ = 5.
const SWEEP_OPT_LIMIT: u128 = 200_000_000;
const SUITE_LIMIT: u128 = u128::MAX;
const SWEEP_SEEDS: u64 = 20;
const SWEEP_PCTS: [f64; 5] = [0.02, 0.04, 0.06, 0.08, 0.10];
const SWEEP_N: usize = 50;
const SWEEP_R: u64 = 1000;
const TIGHTNESS_MIN: f64 = 0.75;
const TIGHTNESS_MEAN: f64 = 0.90;
const HEURISTIC_RATIO: f64 = 0.999;
/// Allowed shortfall of the random-poison probe count below the clean one,
/// as a fraction of the clean mean probe count.
const PROBE_NOISE: f64 = 0.05;
const BOUND_EXPONENT_MAX: f64 = 1.5;
const GREEDY_EXPONENT_MIN: f64 = 1.0;

const TEXTBOOK: [u64; 7] = [2, 11, 13, 19, 32, 36, 39];

fn two_cluster() -> KeySet {
    KeySet::new((0..=16).chain(48..=64).filter(|k| ![1, 8, 56, 63].contains(k)).collect()).unwrap()
}

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Board(Vec<Outcome>);

impl Board {
    fn record(&mut self, id: u32, name: &'static str, budget: Duration, f: impl FnOnce() -> (bool, String)) {
        let t = Instant::now();
        let (ok, detail) = f();
        let took = t.elapsed();
        let pass = ok && took < budget;
        let detail = format!("{detail}; {:.3?} (budget {:?})", took, budget);
        say!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(Outcome { id, name, pass, detail });
    }
}

#[derive(Clone)]
struct SuiteCase {
    keys: KeySet,
    budget: u64,
}

fn suite5() -> Vec<SuiteCase> {
    let mut rng = rng(5);
    (0..200).map(|_| SuiteCase { keys: random_keys(&mut rng, 8, 48), budget: rng.gen_range(0..=3) }).collect()
}

fn suite6() -> Vec<SuiteCase> {
    let mut rng = rng(6);
    (0..200).map(|_| SuiteCase { keys: random_keys(&mut rng, 8, 64), budget: rng.gen_range(0..=4) }).collect()
}

struct SweepRow {
    label: String,
    g: f64,
    opt: f64,
    ropt: f64,
    golden: f64,
    binary: f64,
    exact: f64,
    sege: f64,
    sege_h: f64,
}

fn sweep() -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for seed in 0..SWEEP_SEEDS {
        let keys = generate(&SynthSpec { distribution: Distribution::Uniform, seed, range: SWEEP_R, n: SWEEP_N }).unwrap();
        for pct in SWEEP_PCTS {
            let budget = budget_for(pct, keys.len());
            let fns = candidate_quadratics(&keys, budget);
            rows.push(SweepRow {
                label: format!("seed {seed} pct {pct} n {} λ {budget}", keys.len()),
                g: greedy_attack(&keys, budget).mse_after,
                opt: optimal_attack(&keys, budget, SWEEP_OPT_LIMIT).unwrap().mse_after,
                ropt: optimal_attack_relaxed(&keys, budget, SUITE_LIMIT).unwrap().mse_after,
                golden: upper_bound_golden(&fns, SOLVER_ITERS).unwrap().value,
                binary: upper_bound_binary(&fns, SOLVER_ITERS, None).unwrap().value,
                exact: upper_bound_exact(&fns).unwrap().value,
                sege: sege_exact_original(&keys, budget).unwrap().mse_after,
                sege_h: sege_heuristic_original(&keys, budget).unwrap().mse_after,
            });
        }
    }
    rows
}

/// Chain `G ≤ OPT ≤ ROPT ≤ UB` on one instance; `None` when it holds.
fn chain_violation(keys: &KeySet, budget: u64) -> Option<String> {
    let g = greedy_attack(keys, budget).mse_after;
    let opt = optimal_attack(keys, budget, SUITE_LIMIT).unwrap().mse_after;
    let ropt = optimal_attack_relaxed(keys, budget, SUITE_LIMIT).unwrap().mse_after;
    let ub = upper_bound(keys, budget, BoundMethod::Exact, SOLVER_ITERS).unwrap().value;
    let ok = rel_le(g, opt, CHAIN_REL) && rel_le(opt, ropt, CHAIN_REL) && rel_le(ropt, ub, CHAIN_REL);
    (!ok).then(|| format!("{:?} λ={budget}: {g} {opt} {ropt} {ub}", keys.keys()))
}

/// Least-squares slope of `ln t` against `ln n`.
fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn best_of<T>(reps: u32, mut f: impl FnMut() -> T) -> f64 {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn random_family(rng: &mut ChaCha8Rng) -> Vec<QuadraticFn> {
    let m = rng.gen_range(1..=64);
    (0..m)
        .map(|_| {
            let a2 = rng.gen_range(0.01..10.0);
            let v: f64 = rng.gen_range(-10.0..10.0);
            let c: f64 = rng.gen_range(-10.0..10.0);
            QuadraticFn::new(a2, -2.0 * a2 * v, a2 * v * v + c)
        })
        .collect()
}

#[test]
fn acceptance() {
    let mut board = Board(Vec::new());
    let textbook = KeySet::new(TEXTBOOK.to_vec()).unwrap();

    board.record(1, "golden single-point", Duration::from_millis(1), || {
        let p = single_point_attack(&textbook);
        (p == Some(12), format!("p = {p:?}"))
    });

    board.record(2, "greedy vs optimal on the textbook instance", Duration::from_secs(1), || {
        let g = greedy_attack(&textbook, 2);
        let o = optimal_attack(&textbook, 2, SUITE_LIMIT).unwrap();
        let ok = g.points() == Some(&[12, 10][..]) && o.points() == Some(&[37, 38][..]) && o.mse_after > g.mse_after;
        (ok, format!("greedy {:?} ({}) optimal {:?} ({})", g.points(), g.mse_after, o.points(), o.mse_after))
    });

    board.record(3, "Seg+E counterexample", Duration::from_secs(5), || {
        let k = two_cluster();
        let o = optimal_attack(&k, 2, SUITE_LIMIT).unwrap();
        let s = sege_exact_original(&k, 2).unwrap();
        let ok = o.points() == Some(&[8, 56][..])
            && s.points() == Some(&[1, 8][..])
            && mse_with_extra(&k, &[8, 56]) > mse_with_extra(&k, &[1, 8]);
        (ok, format!("optimal {:?} ({}) Seg+E {:?} ({})", o.points(), o.mse_after, s.points(), s.mse_after))
    });

    board.record(4, "single-point candidate restriction", Duration::from_secs(10), || {
        let mut rng = rng(4);
        let mut bad = Vec::new();
        for _ in 0..500 {
            let k = random_keys(&mut rng, 10, 64);
            let got = single_point_attack(&k).map_or(mse_with_extra(&k, &[]), |p| mse_with_extra(&k, &[p]));
            let want = brute_single(&k);
            let textbook_ok = free_interior(&k).iter().take(3).all(|&x| {
                let a = mse_with_extra(&k, &[x]);
                let b = textbook_mse(&with_extra(&k, &[x]));
                (a - b).abs() <= TEXTBOOK_REL * b.abs().max(1.0)
            });
            if got != want || !textbook_ok {
                bad.push(format!("{:?}: {got} vs {want}", k.keys()));
            }
        }
        (bad.is_empty(), format!("{} mismatches of 500{}", bad.len(), first(&bad)))
    });

    let s5 = suite5();
    board.record(5, "optimal search vs brute force", Duration::from_secs(60), || {
        let mut bad = Vec::new();
        for c in &s5 {
            let o = optimal_attack(&c.keys, c.budget, SUITE_LIMIT).unwrap().mse_after;
            let b = optimal_attack_bruteforce(&c.keys, c.budget, SUITE_LIMIT).unwrap().mse_after;
            if o != b {
                bad.push(format!("{:?} λ={}: {o} vs {b}", c.keys.keys(), c.budget));
            }
        }
        (bad.is_empty(), format!("{} mismatches of {}{}", bad.len(), s5.len(), first(&bad)))
    });

    let s6 = suite6();
    board.record(6, "relaxed optimum saturates the budget", Duration::from_secs(60), || {
        let mut bad = Vec::new();
        for c in &s6 {
            let sat = optimal_attack_relaxed(&c.keys, c.budget, SUITE_LIMIT).unwrap().mse_after;
            let free = relaxed_unsaturated(&c.keys, c.budget);
            if sat != free {
                bad.push(format!("{:?} λ={}: {sat} vs {free}", c.keys.keys(), c.budget));
            }
        }
        (bad.is_empty(), format!("{} mismatches of {}{}", bad.len(), s6.len(), first(&bad)))
    });

    let t_sweep = Instant::now();
    let rows = sweep();
    let sweep_time = t_sweep.elapsed();
    board.record(7, "MSE chain G ≤ OPT ≤ ROPT ≤ UB", Duration::from_secs(300).saturating_sub(sweep_time), || {
        let mut bad: Vec<String> = s5.iter().chain(&s6).filter_map(|c| chain_violation(&c.keys, c.budget)).collect();
        for r in &rows {
            let ok = rel_le(r.g, r.opt, CHAIN_REL) && rel_le(r.opt, r.ropt, CHAIN_REL) && rel_le(r.ropt, r.exact, CHAIN_REL);
            if !ok {
                bad.push(format!("{}: {} {} {} {}", r.label, r.g, r.opt, r.ropt, r.exact));
            }
        }
        let total = s5.len() + s6.len() + rows.len();
        (bad.is_empty(), format!("{} violations of {total} (sweep {:.1?}){}", bad.len(), sweep_time, first(&bad)))
    });

    board.record(8, "min-max solver agreement", Duration::from_secs(1), || {
        let worst = rows
            .iter()
            .map(|r| (r.golden - r.exact).abs().max((r.binary - r.exact).abs()).max((r.golden - r.binary).abs()))
            .fold(0.0, f64::max);
        (worst <= SOLVER_ABS, format!("max |Δ| = {worst:.3e} over {} instances", rows.len()))
    });

    board.record(9, "bound tightness", Duration::from_secs(1), || {
        let ratios: Vec<f64> = rows.iter().map(|r| r.g / r.exact).collect();
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        (min >= TIGHTNESS_MIN && mean >= TIGHTNESS_MEAN, format!("min G/UB = {min:.4}, mean = {mean:.4}"))
    });

    board.record(10, "Seg+E dominates greedy", Duration::from_secs(1), || {
        let below = rows.iter().filter(|r| r.sege < r.g).count();
        let worst_h = rows.iter().map(|r| r.sege_h / r.sege).fold(f64::INFINITY, f64::min);
        (below == 0 && worst_h >= HEURISTIC_RATIO, format!("{below} rows with Seg+E < G; min heuristic ratio {worst_h:.6}"))
    });

    board.record(11, "relaxed Seg+E is optimal in the relaxed setting", Duration::from_secs(60), || {
        let mut counterexamples = Vec::new();
        let mut checked = 0;
        for c in s6.iter().filter(|c| c.keys.len() >= 3) {
            checked += 1;
            let s = sege_exact_relaxed(&c.keys, c.budget).unwrap().mse_after;
            let o = optimal_attack_relaxed(&c.keys, c.budget, SUITE_LIMIT).unwrap().mse_after;
            if s != o {
                counterexamples.push(format!("{:?} λ={}: Seg+E {s} vs optimum {o}", c.keys.keys(), c.budget));
            }
        }
        for ce in &counterexamples {
            say!("    relaxed Seg+E counterexample: {ce}");
        }
        (counterexamples.is_empty(), format!("{} counterexamples in {checked} instances", counterexamples.len()))
    });

    board.record(12, "upper envelope", Duration::from_secs(10), || {
        let mut rng = rng(12);
        let mut bad = Vec::new();
        for _ in 0..100 {
            let fns = random_family(&mut rng);
            let env = upper_envelope(&fns);
            if env.len() > 2 * fns.len() - 1 {
                bad.push(format!("{} pieces for {} functions", env.len(), fns.len()));
            }
            for s in 0..1000 {
                let w = -20.0 + 40.0 * s as f64 / 999.0;
                let (got, want) = (env.eval(w), pointwise_max(&fns, w));
                if (got - want).abs() > 1e-9 * want.abs().max(1.0) {
                    bad.push(format!("w={w}: {got} vs {want}"));
                    break;
                }
            }
        }
        (bad.is_empty(), format!("{} failing families of 100{}", bad.len(), first(&bad)))
    });

    board.record(13, "optimal interior count", Duration::from_secs(10), || {
        let mut rng = rng(13);
        let mut bad = Vec::new();
        let mut cases = 0;
        while cases < 1000 {
            let k = random_keys(&mut rng, 10, 64);
            if k.len() >= 3 {
                check_b(&k, &mut rng, &mut bad);
                cases += 1;
            }
        }
        (bad.is_empty(), format!("{} mismatches of 1000{}", bad.len(), first(&bad)))
    });

    board.record(14, "lookup probes grow under attack", Duration::from_secs(30), || {
        let keys = generate(&SynthSpec { distribution: Distribution::Uniform, seed: 0, range: 100_000, n: 1000 }).unwrap();
        let budget = budget_for(0.2, keys.len());
        match run_bench(&keys, budget, AttackMethod::Greedy, 1, 0, SUITE_LIMIT) {
            Ok(r) => {
                let (g, rnd, clean) = (r.attack.mean_probes, r.random.mean_probes, r.legit.mean_probes);
                let ok = g >= rnd && rnd >= clean - PROBE_NOISE * clean;
                (ok, format!("probes greedy {g:.3} random {rnd:.3} clean {clean:.3}"))
            }
            Err(e) => (false, format!("lookup failed: {e}")),
        }
    });

    board.record(15, "scaling", Duration::from_secs(120), || {
        let sizes = [1_000usize, 10_000, 100_000];
        let sets: Vec<KeySet> = sizes
            .iter()
            .map(|&n| generate(&SynthSpec { distribution: Distribution::Uniform, seed: 15, range: 100 * n as u64, n }).unwrap())
            .collect();
        let mut detail = Vec::new();
        let mut ok = true;
        for method in BoundMethod::ALL {
            let pts: Vec<(f64, f64)> = sets
                .iter()
                .map(|k| {
                    let b = budget_for(0.01, k.len());
                    (k.len() as f64, best_of(5, || upper_bound(k, b, method, SOLVER_ITERS).unwrap()))
                })
                .collect();
            let e = fit_exponent(&pts);
            ok &= e < BOUND_EXPONENT_MAX;
            detail.push(format!("bound/{method} exponent {e:.2}"));
        }
        let pts: Vec<(f64, f64)> = sets
            .iter()
            .map(|k| (k.len() as f64, best_of(1, || greedy_attack(k, budget_for(0.01, k.len())))))
            .collect();
        let e = fit_exponent(&pts);
        ok &= e > GREEDY_EXPONENT_MIN;
        detail.push(format!("greedy exponent {e:.2}"));
        (ok, detail.join(", "))
    });

    let failed: Vec<String> =
        board.0.iter().filter(|o| !o.pass).map(|o| format!("{} {}: {}", o.id, o.name, o.detail)).collect();
    say!("{} of {} criteria passed", board.0.len() - failed.len(), board.0.len());
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

fn check_b(k: &KeySet, rng: &mut ChaCha8Rng, bad: &mut Vec<String>) {
    let budget = rng.gen_range(0..=12u64);
    let a = rng.gen_range(0..=budget);
    let i = rng.gen_range(1..k.len() - 1);
    let ps = PrefixSums::<i128>::new(k);
    let b = get_optimal_b(&ps, a, i, budget);
    let got = mse_with_extra(k, &abi_extra(k, a, b, i, budget));
    let want = scan_b(k, a, i, budget);
    if got != want {
        bad.push(format!("{:?} a={a} i={i} λ={budget}: b={b} {got} vs {want}", k.keys()));
    }
}
