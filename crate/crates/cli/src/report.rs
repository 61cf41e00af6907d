//! Key-sorted JSON run reports.
//!
//! `serde_json::Map` is ordered by key unless the `preserve_order` feature is
//! enabled, and floats print in their shortest round-trip form, so identical
//! inputs yield byte-identical reports.

use serde_json::{json, Map, Value};

use irsir::fitting::{FitResult, OptimizerConfig};
use irsir::forecast::{stamp_for_time, BoundCurve, BoundsConfig, ForecastReport, ThresholdConfig};
use irsir::models::ModelParams;
use irsir::ode::IntegratorConfig;
use irsir::timeseries::{WeekStamp, WeeklySeries};

use crate::FitOptions;

pub struct RunConfig<'a> {
    pub command: &'static str,
    pub fit: &'a FitOptions,
    pub opt: &'a OptimizerConfig,
    pub integ: &'a IntegratorConfig,
    pub forecast: Option<(&'a ThresholdConfig, &'a BoundsConfig)>,
}

fn config_echo(cfg: &RunConfig<'_>) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(cfg.command));
    m.insert("model".into(), json!(cfg.fit.model.as_str()));
    m.insert("seed".into(), json!(cfg.opt.seed));
    m.insert("restarts".into(), json!(cfg.opt.restarts));
    m.insert("x_tol".into(), json!(cfg.opt.x_tol));
    m.insert("f_tol".into(), json!(cfg.opt.f_tol));
    m.insert("max_iter".into(), json!(cfg.opt.max_iter));
    m.insert("jitter".into(), json!(cfg.opt.jitter));
    m.insert("rel_tol".into(), json!(cfg.integ.rel_tol));
    m.insert("abs_tol".into(), json!(cfg.integ.abs_tol));
    if let Some((thresh, bounds)) = cfg.forecast {
        m.insert("fraction".into(), json!(thresh.fraction));
        m.insert("horizon".into(), json!(thresh.horizon));
        m.insert("slack".into(), json!(bounds.slack));
        m.insert("grid_size".into(), json!(bounds.grid_size));
        m.insert("span_decades".into(), json!(bounds.span_decades));
        m.insert("golden_iters".into(), json!(bounds.golden_iters));
        m.insert("bisect_depth".into(), json!(bounds.bisect_depth));
    }
    Value::Object(m)
}

fn params_value(params: &ModelParams) -> Value {
    let y = params.initial_state();
    let (s, i, r) = params.fractions();
    let rate = match params {
        ModelParams::Sir(_) => "gamma",
        ModelParams::IrSir(_) => "nu",
    };
    let mut m = Map::new();
    m.insert("beta".into(), json!(params.beta()));
    m.insert(rate.into(), json!(params.recovery_rate()));
    m.insert("s0".into(), json!(y.s));
    m.insert("i0".into(), json!(y.i));
    m.insert("r0".into(), json!(y.r));
    m.insert("n".into(), json!(params.population()));
    m.insert("s0_over_n".into(), json!(s));
    m.insert("i0_over_n".into(), json!(i));
    m.insert("r0_over_n".into(), json!(r));
    m.insert("immunization_criterion".into(), json!(params.immunization_satisfied()));
    Value::Object(m)
}

fn date_value(t0: WeekStamp, crossing: Option<f64>) -> Value {
    match crossing {
        Some(t) => {
            let stamp = stamp_for_time(t0, t);
            json!({ "status": "found", "month": stamp.month_label(), "week_ending": stamp.to_string(), "week": t })
        }
        None => json!({ "status": "beyond_horizon" }),
    }
}

fn bound_value(t0: WeekStamp, b: &BoundCurve) -> Value {
    json!({
        "params": params_value(&ModelParams::IrSir(b.params)),
        "sse": b.sse,
        "threshold": date_value(t0, b.crossing_week),
    })
}

fn base(cfg: &RunConfig<'_>, digest: &str, data: &WeeklySeries, fit: &FitResult) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("config".into(), config_echo(cfg));
    m.insert("input_digest".into(), json!(digest));
    m.insert(
        "input".into(),
        json!({ "weeks": data.len(), "first_week": data.start().to_string(), "last_week": data.end().to_string() }),
    );
    m.insert("model".into(), json!(fit.params.kind().as_str()));
    m.insert("params".into(), params_value(&fit.params));
    m.insert("sse".into(), json!(fit.sse));
    m.insert("n_evals".into(), json!(fit.n_evals));
    m.insert("converged".into(), json!(fit.converged));
    m.insert("restarts_used".into(), json!(fit.restarts_used));
    m.insert("best_restart".into(), json!(fit.best_restart));
    m.insert("tool".into(), json!({ "name": "irsir", "version": env!("CARGO_PKG_VERSION") }));
    m
}

fn finish(m: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("report values serialize");
    s.push('\n');
    s
}

pub fn fit_report(cfg: &RunConfig<'_>, digest: &str, data: &WeeklySeries, fit: &FitResult) -> String {
    finish(base(cfg, digest, data, fit))
}

pub fn forecast_report(
    cfg: &RunConfig<'_>,
    digest: &str,
    data: &WeeklySeries,
    fit: &FitResult,
    fc: &ForecastReport,
) -> String {
    let t0 = data.start();
    let mut m = base(cfg, digest, data, fit);
    m.insert("peak".into(), json!({ "value": fc.peak_value, "week_ending": fc.peak_date.to_string() }));
    let mut thresholds = Map::new();
    thresholds.insert("best".into(), date_value(t0, fc.crossing_week));
    match &fc.bounds {
        Some(b) => {
            m.insert("sse_limit".into(), json!(b.sse_limit));
            m.insert("bound_evaluations".into(), json!(b.evaluations));
            thresholds.insert("early".into(), date_value(t0, b.early.crossing_week));
            thresholds.insert("late".into(), date_value(t0, b.late.crossing_week));
            m.insert(
                "bounds".into(),
                json!({ "early": bound_value(t0, &b.early), "late": bound_value(t0, &b.late) }),
            );
        }
        None => {
            let na = json!({ "status": "not_applicable" });
            thresholds.insert("early".into(), na.clone());
            thresholds.insert("late".into(), na);
        }
    }
    m.insert("threshold_dates".into(), Value::Object(thresholds));
    finish(m)
}
