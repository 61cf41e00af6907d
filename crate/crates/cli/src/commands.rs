use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use irsir::fitting::{fit_model, FitResult, Objective, OptimizerConfig};
use irsir::forecast::{extrapolate, forecast, BoundsConfig, ThresholdConfig};
use irsir::models::{ModelKind, ModelParams};
use irsir::ode::{IntegratorConfig, Trajectory};
use irsir::timeseries::{self, WeeklySeries};

use crate::plot::{self, Line, LineStyle};
use crate::report::{self, RunConfig};
use crate::{Cli, Command, FitArgs, FitOptions, ForecastArgs, PreprocessArgs};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Numerical(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Data(e) | CliError::Numerical(e) => write!(f, "{e:#}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(anyhow!(msg.into()))
}

pub fn run(cli: Cli) -> Result<()> {
    let Cli { out, threads, command } = cli;
    let exec = move || match command {
        Command::Preprocess(args) => preprocess(&args),
        Command::Fit(args) => fit(&args, &out),
        Command::Forecast(args) => forecast_cmd(&args, &out),
    };
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.into()))?
            .install(exec),
        None => exec(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::Data)
}

fn parse_series(path: &Path, bytes: &[u8]) -> Result<WeeklySeries> {
    let text = std::str::from_utf8(bytes)
        .with_context(|| format!("{} is not UTF-8", path.display()))
        .map_err(CliError::Data)?;
    timeseries::parse_csv(text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::Data)
}

fn load_series(path: &Path) -> Result<WeeklySeries> {
    parse_series(path, &read_bytes(path)?)
}

fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let segments = args.paths.iter().map(|p| load_series(p)).collect::<Result<Vec<_>>>()?;
    let mut series = timeseries::stitch(&segments).context("stitching segments").map_err(CliError::Data)?;
    if let (Some(cut), Some(factor)) = (args.cut, args.factor) {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(usage(format!("--factor must be positive, got {factor}")));
        }
        series = timeseries::apply_step_correction(&series, cut, factor)
            .context("applying step correction")
            .map_err(CliError::Data)?;
    }
    let reference = args.reference.as_deref().map(load_series).transpose()?;
    let normalized =
        timeseries::normalize(&series, reference.as_ref()).context("normalizing").map_err(CliError::Data)?;
    print!("{}", timeseries::to_csv(&normalized));
    Ok(())
}

fn configs(opts: &FitOptions) -> Result<(OptimizerConfig, IntegratorConfig)> {
    let opt = OptimizerConfig { seed: opts.seed, restarts: opts.restarts, ..Default::default() };
    let integ = IntegratorConfig { rel_tol: opts.rel_tol, ..Default::default() };
    opt.validate().map_err(|e| CliError::Usage(e.into()))?;
    integ.validate().map_err(|e| CliError::Usage(e.into()))?;
    Ok((opt, integ))
}

struct Fitted {
    data: WeeklySeries,
    digest: String,
    fit: FitResult,
    opt: OptimizerConfig,
    integ: IntegratorConfig,
}

fn load_and_fit(path: &Path, opts: &FitOptions) -> Result<Fitted> {
    let (opt, integ) = configs(opts)?;
    let bytes = read_bytes(path)?;
    let digest = format!("sha256:{}", hex::encode(Sha256::digest(&bytes)));
    let data = parse_series(path, &bytes)?;
    let fit = fit_model(&data, opts.model, None, &opt, &integ)
        .with_context(|| format!("fitting {} model", opts.model))
        .map_err(CliError::Numerical)?;
    Ok(Fitted { data, digest, fit, opt, integ })
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(CliError::Data)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display())).map_err(CliError::Data)
}

fn curve_csv(data: &WeeklySeries, curve: &Trajectory) -> String {
    timeseries::points_to_csv(curve.infected().enumerate().map(|(k, i)| (data.stamp_at(k), i)))
}

fn fit(args: &FitArgs, out: &Path) -> Result<()> {
    let f = load_and_fit(&args.path, &args.fit)?;
    let curve = Objective::new(f.data.clone(), f.fit.params.kind(), f.integ)
        .curve(&f.fit.params)
        .context("re-integrating best fit")
        .map_err(CliError::Numerical)?;

    let config = RunConfig { command: "fit", fit: &args.fit, opt: &f.opt, integ: &f.integ, forecast: None };
    let text = report::fit_report(&config, &f.digest, &f.data, &f.fit);
    write_artifact(out, "fit_report.json", &text)?;
    write_artifact(out, "fit_curve.csv", &curve_csv(&f.data, &curve))?;
    if !args.no_plot {
        let lines = [
            Line { label: "data", values: f.data.values().to_vec(), style: LineStyle::Data },
            Line { label: f.fit.params.kind().as_str(), values: curve.infected().collect(), style: LineStyle::Fit },
        ];
        let title = format!("{} fit, SSE {:.4e}", f.fit.params.kind(), f.fit.sse);
        write_artifact(out, "fit_plot.svg", &plot::render(&title, f.data.start(), &lines))?;
    }
    print!("{text}");
    Ok(())
}

fn forecast_cmd(args: &ForecastArgs, out: &Path) -> Result<()> {
    let thresh = ThresholdConfig { fraction: args.fraction, horizon: args.horizon };
    thresh.validate().map_err(|e| CliError::Usage(e.into()))?;
    let bounds_cfg = BoundsConfig { slack: args.slack, grid_size: args.grid_size, ..Default::default() };
    bounds_cfg.validate().map_err(|e| CliError::Usage(e.into()))?;

    let f = load_and_fit(&args.path, &args.fit)?;
    let with_bounds = (f.fit.params.kind() == ModelKind::IrSir).then_some(&bounds_cfg);
    let fc = forecast(&f.data, &f.fit, &thresh, with_bounds, &f.integ)
        .context("forecasting")
        .map_err(CliError::Numerical)?;

    let config = RunConfig {
        command: "forecast",
        fit: &args.fit,
        opt: &f.opt,
        integ: &f.integ,
        forecast: Some((&thresh, &bounds_cfg)),
    };
    let text = report::forecast_report(&config, &f.digest, &f.data, &f.fit, &fc);
    write_artifact(out, "forecast_report.json", &text)?;
    write_artifact(out, "forecast_curve.csv", &curve_csv(&f.data, &fc.best_curve))?;

    let mut lines = vec![
        Line { label: "data", values: f.data.values().to_vec(), style: LineStyle::Data },
        Line { label: "best", values: fc.best_curve.infected().collect(), style: LineStyle::Fit },
    ];
    if let Some(b) = &fc.bounds {
        for (name, curve, style) in [("early", &b.early, LineStyle::Early), ("late", &b.late, LineStyle::Late)] {
            let traj = extrapolate(&ModelParams::IrSir(curve.params), f.data.len(), thresh.horizon, &f.integ)
                .with_context(|| format!("extrapolating {name} bound"))
                .map_err(CliError::Numerical)?;
            write_artifact(out, &format!("forecast_{name}.csv"), &curve_csv(&f.data, &traj))?;
            lines.push(Line { label: name, values: traj.infected().collect(), style });
        }
    }
    if !args.no_plot {
        let title = format!("{} forecast, {:.0}% threshold", f.fit.params.kind(), 100.0 * thresh.fraction);
        write_artifact(out, "forecast_plot.svg", &plot::render(&title, f.data.start(), &lines))?;
    }
    print!("{text}");
    Ok(())
}
