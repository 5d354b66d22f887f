//! `evcop`: fit, simulate and evaluate semiparametric extreme-value copulas.

mod commands;
mod dataset;
mod error;
mod joint;
mod model;
mod study;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "evcop", version, about = "Semiparametric bivariate extreme-value copulas")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a spline extreme-value copula to a two-column CSV sample.
    Fit(FitArgs),
    /// Draw a sample from a model file.
    Simulate(SimulateArgs),
    /// Report association measures and tabulate the Pickands function.
    Evaluate(EvaluateArgs),
    /// Run a simulation study described by a JSON file.
    Study(StudyArgs),
    /// Fit a shared margin and an exchangeable survival copula to ordered pairs.
    Joint(JointArgs),
}

/// Options shared by every command that fits a copula.
#[derive(Args, Clone)]
pub struct FitOptions {
    /// Number of spline coefficients.
    #[arg(long, default_value_t = 13)]
    pub dim: usize,
    /// Curvature penalty factor.
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    /// Interior nodes of the interpolation grid.
    #[arg(long, default_value_t = 78)]
    pub grid_k: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the variable order instead of choosing it from the mode of z.
    #[arg(long)]
    pub no_flip_heuristic: bool,
}

impl FitOptions {
    pub fn config(&self) -> evcop_core::fit::FitConfig {
        evcop_core::fit::FitConfig {
            basis_dim: self.dim,
            lambda: self.lambda,
            grid_k: self.grid_k,
            max_iter: self.max_iter,
            seed: self.seed,
            ordering_heuristic: !self.no_flip_heuristic,
            ..Default::default()
        }
    }
}

#[derive(Args)]
pub struct FitArgs {
    /// CSV file with two numeric columns.
    pub input: PathBuf,
    /// Where to write the model JSON.
    #[arg(short, long, default_value = "model.json")]
    pub output: PathBuf,
    /// Also write the fit report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Rank-transform raw data into pseudo-observations.
    #[arg(long)]
    pub pseudo: bool,
    /// Fit the copula of (1 - U, 1 - V) and store the model as its survival copula.
    #[arg(long)]
    pub survival: bool,
    #[command(flatten)]
    pub fit: FitOptions,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Model JSON (fitted or parametric).
    pub model: PathBuf,
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    pub model: PathBuf,
    /// Write a CSV table of t, A, A', A'' and h.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Write the measures JSON here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct StudyArgs {
    /// Study description (JSON).
    pub spec: PathBuf,
    #[arg(short, long, default_value = "study-out")]
    pub output_dir: PathBuf,
    /// Write zero run times so that repeated runs give identical files.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args)]
pub struct JointArgs {
    /// CSV with two columns, the first at least as large as the second in every row.
    pub input: PathBuf,
    #[arg(short, long, default_value = "joint-out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lower: f64,
    #[arg(long, default_value_t = 100.0)]
    pub upper: f64,
    /// Spline coefficients of the margin density.
    #[arg(long, default_value_t = 17)]
    pub margin_dim: usize,
    #[arg(long, default_value_t = 10.0)]
    pub margin_lambda: f64,
    /// Number of joint draws to emit.
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    /// Side of the joint density grid (0 disables it).
    #[arg(long, default_value_t = 0)]
    pub density_grid: usize,
    #[command(flatten)]
    pub fit: FitOptions,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Study(a) => study::run(&a),
        Command::Joint(a) => joint::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evcop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
