//! `riskbai`: run error-rate experiments, check concentration bounds
//! against simulation, evaluate bounds and demonstrate the tail-inflation
//! construction. All output is CSV.

mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskbai_core::harness::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "riskbai", version, about = "Risk-aware fixed-budget best-arm identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo error rates of RA-GSR over a budget grid.
    RunExperiment(RunArgs),
    /// Deviation frequencies of an estimator against a concentration bound.
    ValidateConcentration(ValidateArgs),
    /// Closed-form bounds and validity thresholds for a moment prior.
    ComputeBounds(BoundsArgs),
    /// KL divergence and objective of tail-inflated perturbations of a base.
    DemoLowerBound(DemoArgs),
    /// Built-in instances with their budgets and estimator families.
    ListInstances,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output CSV (written atomically); standard output if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML plan file.
    #[arg(long, value_name = "PATH", required_unless_present = "instance")]
    pub config: Option<PathBuf>,
    /// Built-in instance (overrides the plan's `instance`).
    #[arg(long, value_name = "NAME")]
    pub instance: Option<String>,
    /// Trials per budget.
    #[arg(long, value_name = "N", conflicts_with = "paper_scale")]
    pub trials: Option<u64>,
    /// Comma-separated budget grid, strictly increasing.
    #[arg(long, value_name = "CSVLIST", value_delimiter = ',')]
    pub budgets: Option<Vec<u64>>,
    /// Master seed [default: plan seed, else 12648430].
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads [default: one per core].
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Full-scale trial count (50000 per budget).
    #[arg(long)]
    pub paper_scale: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Loss distribution, e.g. `lomax:mean=1,shape=1.8` or a TOML inline table.
    #[arg(long, value_name = "SPEC")]
    pub dist: String,
    /// Estimator kind: empirical, truncated or median-of-bins.
    #[arg(long, value_name = "KIND", default_value = "empirical")]
    pub estimator: String,
    /// Estimate the CVaR at this level (the mean if omitted).
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,
    /// Schedule exponent: truncation level or bin size `offset + n^q`.
    #[arg(long, value_name = "Q")]
    pub q: Option<f64>,
    /// Fixed part of the truncation level or bin size.
    #[arg(long, value_name = "X", default_value_t = 0.0)]
    pub offset: f64,
    /// Bound to test: empirical-cvar, pareto-lower, truncated-cvar,
    /// bounded-cvar, median-of-cvars, empirical-mean, truncated-mean or
    /// median-of-means [default: the one matching the estimator].
    #[arg(long, value_name = "NAME")]
    pub bound: Option<String>,
    /// Moment order `p` in (1, 2].
    #[arg(long, value_name = "P", default_value_t = 2.0)]
    pub p: f64,
    /// Bound on `E|X|^p` [default: the distribution's own moment].
    #[arg(long = "moment-b", value_name = "B")]
    pub moment_b: Option<f64>,
    /// Bound on `E|X - EX|^p` [default: the distribution's own moment].
    #[arg(long = "moment-v", value_name = "V")]
    pub moment_v: Option<f64>,
    /// One side only for the empirical-CVaR bound: lower or upper.
    #[arg(long, value_name = "SIDE")]
    pub side: Option<String>,
    /// Pass factor for the Pareto lower bound.
    #[arg(long, value_name = "F", default_value_t = 0.5)]
    pub factor: f64,
    /// Comma-separated sample sizes.
    #[arg(long, value_name = "CSVLIST", value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Deviation size.
    #[arg(long, value_name = "DELTA")]
    pub delta: f64,
    /// Independent batches per sample size.
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    pub batches: u64,
    #[arg(long, value_name = "U64", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Moment order `p` in (1, 2].
    #[arg(long, value_name = "P", default_value_t = 2.0)]
    pub p: f64,
    /// Bound on `E|X|^p`; required unless `--dist` is given.
    #[arg(long = "moment-b", value_name = "B")]
    pub moment_b: Option<f64>,
    /// Bound on `E|X - EX|^p`; required unless `--dist` is given.
    #[arg(long = "moment-v", value_name = "V")]
    pub moment_v: Option<f64>,
    /// Take `B` and `V` from this distribution's moments.
    #[arg(long, value_name = "SPEC")]
    pub dist: Option<String>,
    /// Deviation size (or smallest gap).
    #[arg(long, value_name = "DELTA")]
    pub delta: f64,
    #[arg(long, value_name = "ALPHA", default_value_t = 0.95)]
    pub alpha: f64,
    /// Sample size the estimator bounds are evaluated at.
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    pub n: u64,
    /// Exponent of the truncated-mean level `n^q` and of the bandit schedules.
    #[arg(long, value_name = "Q", default_value_t = 0.3)]
    pub q: f64,
    /// Clipping level for the truncated-CVaR and bounded-CVaR bounds
    /// [default: the truncated-CVaR validity threshold].
    #[arg(long, value_name = "B")]
    pub level: Option<f64>,
    /// Also bound the error of RA-GSR on this built-in instance.
    #[arg(long, value_name = "NAME")]
    pub instance: Option<String>,
    /// Budget for the instance bounds.
    #[arg(long, value_name = "T", requires = "instance")]
    pub budget: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Base distribution.
    #[arg(long, value_name = "SPEC", default_value = "pareto:scale=1,shape=1.5")]
    pub base: String,
    /// Comma-separated cutoffs `b`.
    #[arg(long = "b", value_name = "CSVLIST", value_delimiter = ',', default_value = "10,100,1000")]
    pub cutoffs: Vec<f64>,
    /// Tail index of the inflated piece [default: the base's tail index].
    #[arg(long, value_name = "P")]
    pub index: Option<f64>,
    #[arg(long, value_name = "ALPHA", default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, value_name = "XI1", default_value_t = 0.5)]
    pub xi1: f64,
    #[arg(long, value_name = "XI2", default_value_t = 0.5)]
    pub xi2: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunExperiment(a) => commands::run_experiment(&a),
        Command::ValidateConcentration(a) => commands::validate(&a),
        Command::ComputeBounds(a) => commands::compute_bounds(&a),
        Command::DemoLowerBound(a) => commands::demo_lower_bound(&a),
        Command::ListInstances => commands::list_instances(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
