//! Command-line front end for selector-core: dataset generation, PSGD
//! traces, conditional-classification training, sparse list learning,
//! classification reductions, brute-force oracles, the statistical check
//! suite, and seeded accuracy sweeps.
//!
//! Exit codes: 0 on success, 1 on runtime failures (including failed
//! non-advisory checks), 2 on usage errors and refused budgets.

#![recursion_limit = "256"]

mod commands;
mod io;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "selector-lab", version, about = "Halfspace-selector learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-model dataset as CSV plus the model as JSON.
    Gen(GenArgs),
    /// Run projected SGD against a planted model and export the trace.
    Psgd(PsgdArgs),
    /// Train a selector for each classifier and keep the best pair.
    Ccfc(CcfcArgs),
    /// List-learn sparse classifiers, then train selectors over the list.
    Ccslc(CcslcArgs),
    /// Enumerate the sparse-classifier list for a labeled CSV.
    ListLearn(ListLearnArgs),
    /// Solve agnostic classification through conditional learners.
    Reduce(ReduceArgs),
    /// Brute-force search: direction grids or exhaustive family scans.
    Oracle(OracleArgs),
    /// Run the statistical check suite and emit the reports as JSON.
    Verify(VerifyArgs),
    /// Accuracy sweep: train at each (epsilon, seed) cell and tabulate
    /// the true planted error against epsilon.
    Sweep(SweepArgs),
}

#[derive(Args, Serialize)]
struct GenArgs {
    /// Ambient dimension.
    #[arg(long)]
    d: usize,
    /// Label-flip rate inside the planted halfspace.
    #[arg(long = "p-in")]
    p_in: f64,
    /// Label-flip rate outside it.
    #[arg(long = "p-out")]
    p_out: f64,
    /// Number of examples.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PsgdArgs {
    /// Planted model JSON (provides the classifier and, without --data,
    /// the example stream).
    #[arg(long)]
    model: PathBuf,
    /// Optional dataset CSV to resample instead of the model stream.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    iterations: usize,
    #[arg(long)]
    batch: usize,
    /// Holdout size for picking the best iterate.
    #[arg(long, default_value_t = 10_000)]
    holdout: usize,
    /// Step size override; the default is sqrt(1 / (T d)).
    #[arg(long = "step-size")]
    step_size: Option<f64>,
    /// Stop early once the batch gradient norm drops below the threshold
    /// for this accuracy.
    #[arg(long = "stop-eps")]
    stop_eps: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScheduleArg {
    Theoretical,
    Override,
}

#[derive(Args, Serialize)]
struct CcfcArgs {
    /// Planted model JSON; supplies the example stream.
    #[arg(long)]
    model: PathBuf,
    /// JSON array of candidate classifiers; defaults to the model's own.
    #[arg(long)]
    classifiers: Option<PathBuf>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Theoretical)]
    schedule: ScheduleArg,
    /// Override schedule: PSGD iterations T.
    #[arg(long)]
    iterations: Option<usize>,
    /// Override schedule: gradient batch size N.
    #[arg(long)]
    batch: Option<usize>,
    /// Override schedule: holdout size.
    #[arg(long)]
    holdout: Option<usize>,
    /// Largest example budget a theoretical-schedule run may launch
    /// without --force.
    #[arg(long, default_value_t = 100_000_000)]
    budget: u64,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CcslcArgs {
    #[arg(long)]
    model: PathBuf,
    /// Sparsity of the list-learned classifiers.
    #[arg(long)]
    sparsity: usize,
    /// Examples drawn for list learning.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Theoretical)]
    schedule: ScheduleArg,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long, default_value_t = 100_000_000)]
    budget: u64,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ListLearnArgs {
    /// Labeled dataset CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    sparsity: usize,
    /// Margin subtracted from the right-hand side of each tuple system.
    #[arg(long, default_value_t = 1e-3)]
    nu: f64,
    /// Keep duplicate weight vectors instead of collapsing them.
    #[arg(long = "no-dedup")]
    no_dedup: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ReduceMode {
    Additive,
    Multiplicative,
}

#[derive(Args, Serialize)]
struct ReduceArgs {
    /// Labeled dataset CSV, interpreted as a uniform finite distribution.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    mode: ReduceMode,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Learner approximation factor for the multiplicative mode.
    #[arg(long)]
    alpha: Option<f64>,
    /// Coordinate whose thresholds generate the hypothesis family.
    #[arg(long = "family-axis", default_value_t = 0)]
    family_axis: usize,
    /// Largest family size (complements included).
    #[arg(long = "family-max", default_value_t = 64)]
    family_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OracleMode {
    Grid,
    Exhaustive,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long, value_enum)]
    mode: OracleMode,
    /// Labeled dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Planted model JSON; its classifier is the one evaluated (grid mode).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Angular resolution of the direction grid.
    #[arg(long, default_value_t = 360)]
    resolution: usize,
    /// Comma-separated halfspace thresholds; default homogeneous.
    #[arg(long)]
    thresholds: Option<String>,
    /// Exhaustive mode: threshold family axis.
    #[arg(long = "family-axis", default_value_t = 0)]
    family_axis: usize,
    #[arg(long = "family-max", default_value_t = 64)]
    family_max: usize,
    /// Exhaustive mode: restrict to selection mass in `a,b` and minimize
    /// conditional error instead of classification error.
    #[arg(long)]
    band: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Check suite to run; only `default` is defined.
    #[arg(long, default_value = "default")]
    suite: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// Comma-separated accuracy grid, each value in (0, 1/e].
    #[arg(long)]
    eps: String,
    /// Seeds as `a..b` (inclusive) or a comma-separated list.
    #[arg(long)]
    seeds: String,
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Flip rate outside the planted halfspace; inside it is 2 epsilon,
    /// making the planted optimum exactly epsilon.
    #[arg(long = "p-out", default_value_t = 0.5)]
    p_out: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 10_000)]
    holdout: usize,
    #[arg(long, default_value_t = 100_000_000)]
    budget: u64,
    #[arg(long)]
    force: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Invalid invocation discovered after clap parsing: bad value ranges,
/// missing conditional flags, refused budgets. Exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() {
    if let Ok(threads) = std::env::var("SELECTOR_LAB_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("error: SELECTOR_LAB_THREADS must be a positive integer");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => commands::run_gen(&args),
        Command::Psgd(args) => commands::run_psgd(&args),
        Command::Ccfc(args) => commands::run_ccfc(&args),
        Command::Ccslc(args) => commands::run_ccslc(&args),
        Command::ListLearn(args) => commands::run_list_learn(&args),
        Command::Reduce(args) => commands::run_reduce(&args),
        Command::Oracle(args) => commands::run_oracle(&args),
        Command::Verify(args) => commands::run_verify(&args),
        Command::Sweep(args) => commands::run_sweep(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.is::<UsageError>() { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}
