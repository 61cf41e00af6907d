//! `irsir`: preprocess weekly series, fit SIR/irSIR models and forecast
//! decline dates from the command line.
//!
//! Exit codes: 0 success (infeasible bounds included), 1 usage error,
//! 2 data error, 3 numerical failure.

mod commands;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsir::timeseries::WeekStamp;
use irsir::ModelKind;

/// Environment variable naming the default artifact directory.
pub const OUT_DIR_ENV: &str = "IRSIR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "irsir", version, about = "Fit SIR and irSIR models to weekly activity series")]
pub struct Cli {
    /// Directory for reports, curves and plots.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for restarts and bound searches (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stitch segments, optionally correct a step artifact, normalize to 100.
    Preprocess(PreprocessArgs),
    /// Fit a model and write a report, fitted curve and plot.
    Fit(FitArgs),
    /// Fit, extrapolate and search SSE-slack prediction bounds.
    Forecast(ForecastArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Week ending after which values are rescaled.
    #[arg(long, requires = "factor")]
    pub cut: Option<WeekStamp>,

    /// Multiplicative correction for weeks after `--cut`.
    #[arg(long, requires = "cut")]
    pub factor: Option<f64>,

    /// Series whose maximum defines 100 on the output scale.
    #[arg(long)]
    pub reference: Option<PathBuf>,

    /// Overlapping segment CSVs, in chronological order.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitOptions {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 20)]
    pub restarts: usize,

    /// Integrator relative tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub fit: FitOptions,

    /// Skip the SVG plot.
    #[arg(long)]
    pub no_plot: bool,

    /// Canonical weekly CSV.
    pub path: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub fit: FitOptions,

    /// Fraction of the peak that defines the end-of-life date.
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,

    /// Allowed relative SSE increase for the prediction bounds.
    #[arg(long, default_value_t = 0.15)]
    pub slack: f64,

    /// Weeks to extrapolate past the last observation.
    #[arg(long, default_value_t = 520)]
    pub horizon: usize,

    /// Nodes per axis of the coarse (R0, nu) bound grid.
    #[arg(long, default_value_t = 15)]
    pub grid_size: usize,

    /// Skip the SVG plot.
    #[arg(long)]
    pub no_plot: bool,

    /// Canonical weekly CSV.
    pub path: PathBuf,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
