use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cdfpoison::attack::{run_attack, AttackMethod, AttackReport, DEFAULT_LIMIT};
use cdfpoison::bound::{upper_bound, BoundMethod, BoundResult, DEFAULT_ITERS};
use cdfpoison::datasets::{generate, read_keyset, write_keys, Distribution, KeyFormat, SynthSpec};
use cdfpoison::experiment::{budget_for, run_experiment, write_csv, ExperimentSpec, Source};
use cdfpoison::lookup::run_bench;
use cdfpoison::{Error, KeySet, Result};

#[derive(Parser)]
#[command(name = "cdfpoison", version, about = "Poisoning attacks and impact bounds for linear regression on CDFs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic key file.
    Gen(GenArgs),
    /// Run one attack and print its report as JSON.
    Attack(AttackArgs),
    /// Compute the upper bound on attack impact as JSON.
    Bound(BoundArgs),
    /// Run the ratio experiment grid and emit CSV (or JSON).
    Experiment(ExperimentArgs),
    /// Benchmark lookups through clean and poisoned models as JSON.
    LookupBench(BenchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Key file (binary: u64 LE count + u64 LE keys; text: one key per line).
    #[arg(long)]
    input: PathBuf,
    /// Key file format; inferred from a `.txt` extension when omitted.
    #[arg(long)]
    format: Option<KeyFormat>,
}

impl InputArgs {
    fn format(&self) -> KeyFormat {
        self.format.unwrap_or_else(|| infer_format(&self.input))
    }

    fn load(&self) -> Result<KeySet> {
        read_keyset(&self.input, self.format())
    }
}

fn infer_format(path: &Path) -> KeyFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("txt") => KeyFormat::Txt,
        _ => KeyFormat::Bin,
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BudgetArgs {
    /// Number of poisons.
    #[arg(long)]
    lambda: Option<u64>,
    /// Poisoning percentage in (0, 1]; λ = round(pct·n).
    #[arg(long)]
    pct: Option<f64>,
}

impl BudgetArgs {
    fn resolve(&self, n: usize) -> Result<u64> {
        match (self.lambda, self.pct) {
            (Some(l), _) => Ok(l),
            (None, Some(p)) if p > 0.0 && p <= 1.0 => Ok(budget_for(p, n)),
            (None, Some(p)) => Err(Error::InvalidParameter(format!("percentage {p} outside (0, 1]"))),
            (None, None) => unreachable!("clap enforces one budget flag"),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "uniform")]
    distribution: Distribution,
    /// Keys land in [0, R].
    #[arg(long = "range", short = 'R')]
    range: u64,
    /// Number of samples before deduplication.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "bin")]
    format: KeyFormat,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "greedy")]
    method: AttackMethod,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Enumeration cap for the exhaustive methods.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "exact")]
    method: BoundMethod,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Solver iterations for the golden and binary methods.
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    iters: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Slice a real key file instead of generating synthetic keys.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<KeyFormat>,
    #[arg(long, default_value = "uniform")]
    distribution: Distribution,
    #[arg(long = "range", short = 'R', default_value_t = 1000)]
    range: u64,
    /// Samples per synthetic set, or slice length.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Seed range `start..end` (half-open) or a count `N` meaning `0..N`.
    #[arg(long, default_value = "0..20")]
    seeds: SeedRange,
    /// Comma-separated poisoning percentages.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.04,0.06,0.08,0.1")]
    pcts: Vec<f64>,
    /// Enumeration cap for the optimal attack.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u128,
    /// Enumeration cap for the optimal relaxed attack.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    relaxed_limit: u128,
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    iters: u32,
    #[arg(long, default_value = "exact")]
    bound_method: BoundMethod,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON rows instead of CSV.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV (the default).
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "greedy")]
    method: AttackMethod,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 10)]
    reps: u32,
    /// Seed of the random-poison control.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
struct SeedRange(u64, u64);

impl std::str::FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(SeedRange(num(a)?, num(b)?)),
            None => Ok(SeedRange(0, num(s)?)),
        }
    }
}

#[derive(Serialize)]
struct AttackOutput {
    n: usize,
    #[serde(flatten)]
    report: AttackReport,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct BoundOutput {
    n: usize,
    budget: u64,
    #[serde(flatten)]
    result: BoundResult,
    wall_time_ms: f64,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let keys = generate(&SynthSpec { distribution: a.distribution, seed: a.seed, range: a.range, n: a.n })?;
    write_keys(&a.out, keys.keys(), a.format)?;
    println!("n={} min={} max={}", keys.len(), keys.first(), keys.last());
    Ok(())
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    let keys = a.input.load()?;
    let budget = a.budget.resolve(keys.len())?;
    let t = Instant::now();
    let report = run_attack(&keys, a.method, budget, a.limit)?;
    emit_json(&AttackOutput { n: keys.len(), report, wall_time_ms: millis(t) }, a.out.as_deref())
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    let keys = a.input.load()?;
    let budget = a.budget.resolve(keys.len())?;
    let t = Instant::now();
    let result = upper_bound(&keys, budget, a.method, a.iters)?;
    emit_json(&BoundOutput { n: keys.len(), budget, result, wall_time_ms: millis(t) }, a.out.as_deref())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let source = match &a.input {
        Some(path) => {
            Source::Slice { path: path.clone(), n: a.n, format: a.format.unwrap_or_else(|| infer_format(path)) }
        }
        None => Source::Synth { distribution: a.distribution, range: a.range, n: a.n },
    };
    let spec = ExperimentSpec {
        source,
        seeds: (a.seeds.0, a.seeds.1),
        pcts: a.pcts,
        opt_limit: a.limit,
        ropt_limit: a.relaxed_limit,
        iters: a.iters,
        bound_method: a.bound_method,
    };
    let rows = run_experiment(&spec)?;
    if a.json {
        emit_json(&rows, a.out.as_deref())
    } else {
        write_csv(&rows, sink(a.out.as_deref())?)
    }
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let keys = a.input.load()?;
    let budget = a.budget.resolve(keys.len())?;
    let report = run_bench(&keys, budget, a.method, a.reps, a.seed, a.limit)?;
    emit_json(&report, a.out.as_deref())
}

/// 2: invalid input, 3: enumeration cap exceeded, 4: I/O failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SearchSpaceTooLarge { .. } => 3,
        Error::Io(_) => 4,
        Error::KeyNotFound(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::LookupBench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
