//! `aipw-design`: estimate planning parameters from historical data, size a
//! trial, analyze trial data and run simulation experiments.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "aipw-design", version, about = "Design and analysis of randomized trials around the AIPW estimator")]
pub struct Cli {
    /// Seed for every stochastic step. Required by estimate-params, analyze,
    /// simulate and generate.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, default_value = "auto")]
    pub threads: String,

    /// Output file; the format follows the extension (.json or .csv).
    /// Defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate sigma, kappa and the arm means from a historical control CSV.
    EstimateParams(EstimateParamsArgs),
    /// Enrollment targets for the AIPW and unadjusted analyses.
    Design(DesignArgs),
    /// Analyze a trial CSV.
    Analyze(AnalyzeArgs),
    /// Run a power / type-I error simulation grid.
    Simulate(SimulateArgs),
    /// Write a simulated trial or historical CSV from a benchmark scenario.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
pub struct EstimateParamsArgs {
    /// CSV with header `y0,x1,...,xd`.
    #[arg(long)]
    pub historical: PathBuf,
    /// ensemble | ols | knn[:k] | gbm[:trees:depth[:lr[:min_leaf]]]
    #[arg(long, default_value = "ensemble")]
    pub learner: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Effect the trial should detect, on the scale of --effect.
    #[arg(long)]
    pub target_effect: f64,
    /// diff | or
    #[arg(long, default_value = "diff")]
    pub effect: String,
    #[arg(long, default_value_t = 0.5)]
    pub pi1: f64,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Output of estimate-params, or a bare parameter object.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub power: f64,
    /// diff | or (defaults to the effect recorded in the params file).
    #[arg(long)]
    pub effect: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_n: u64,
    /// Correlation of the arm conditional means (default from params, 0 when estimated).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub kappa1: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// CSV with header `w,y,x1,...,xd`.
    #[arg(long)]
    pub trial: PathBuf,
    /// unadj | ancova | aipw
    #[arg(long, default_value = "aipw")]
    pub estimator: String,
    /// ensemble | ols | knn[:k] | gbm[:trees:depth[:lr[:min_leaf]]]
    #[arg(long, default_value = "ensemble")]
    pub learner: String,
    /// Cross-fitting folds for aipw.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Randomization probability of the treatment arm.
    #[arg(long, default_value_t = 0.5)]
    pub pi1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// diff | or
    #[arg(long, default_value = "diff")]
    pub effect: String,
    /// Include the per-subject influence values.
    #[arg(long)]
    pub full: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario names (comma separated), `all`, or a JSON file with scenario specs.
    #[arg(long, default_value = "all")]
    pub scenario: String,
    /// Comma separated: unadj, ancova, aipw[:learner], oracle; `all` for the
    /// default four; `learners` for aipw with each learner.
    #[arg(long, default_value = "all")]
    pub estimators: String,
    /// `auto` or comma separated sample sizes.
    #[arg(long, default_value = "auto")]
    pub n_grid: String,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub power: f64,
    #[arg(long, default_value_t = 0.5)]
    pub pi1: f64,
    /// Cross-fitting folds for aipw.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Shift each scenario to a zero average effect (type-I error mode).
    #[arg(long)]
    pub null: bool,
    /// Historical sample size for the prospective enrollment targets.
    #[arg(long, default_value_t = 10_000)]
    pub historical_n: usize,
    #[arg(long, default_value_t = 5)]
    pub design_folds: usize,
    /// Monte-Carlo draws for the true scenario parameters.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_reps: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_n: u64,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub n: usize,
    /// trial | historical
    #[arg(long, default_value = "trial")]
    pub kind: String,
    #[arg(long, default_value_t = 0.5)]
    pub pi1: f64,
    /// Shift the scenario to a zero average effect.
    #[arg(long)]
    pub null: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
