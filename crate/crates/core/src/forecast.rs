//! Extrapolation, end-of-life dates and SSE-slack prediction bounds.
//!
//! The "threshold date" of a curve is the first week after its peak at which
//! `I(t)` has fallen to a given fraction (20% by default) of its maximum.
//!
//! Prediction bounds are the level set `{ SSE <= (1 + slack) * SSE_best }`
//! explored for its earliest and latest threshold dates. The search plane is
//! `(ln R0, ln nu)`, the two parameters that govern the decline; at every
//! point of the plane the remaining parameters `(beta, S0, I0)` are refit by
//! simplex search. A coarse log grid is scanned in parallel. Each extreme is
//! then refined along the feasibility frontier: for a fixed `nu` the decline
//! moves monotonically with `R0`, so the frontier point is found by
//! bisection in `ln R0`, and a golden-section search over `ln nu` picks the
//! most extreme frontier point near the grid's best node.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::fitting::{polished_minimum, FitError, FitResult, Objective, OptimizerConfig};
use crate::models::{IrSirParams, ModelKind, ModelParams};
use crate::ode::{IntegrationError, IntegratorConfig, Trajectory};
use crate::timeseries::{WeekStamp, WeeklySeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("prediction bounds need an irSIR fit, got {0}")]
    NotIrSir(ModelKind),
    #[error("invalid forecast configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    /// Fraction of the peak that marks the end of life.
    pub fraction: f64,
    /// Weeks to extrapolate past the last observation.
    pub horizon: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig { fraction: 0.20, horizon: 520 }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(ForecastError::InvalidConfig("fraction must lie in (0, 1)"));
        }
        if self.horizon == 0 {
            return Err(ForecastError::InvalidConfig("horizon must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsConfig {
    /// Allowed relative SSE increase over the best fit. Zero collapses both
    /// bounds onto the best fit.
    pub slack: f64,
    /// Nodes per axis of the coarse `(ln R0, ln nu)` grid.
    pub grid_size: usize,
    /// Half-width of the grid in decades around the best fit.
    pub span_decades: f64,
    /// Golden-section iterations over `ln nu` when refining each extreme.
    pub golden_iters: usize,
    /// Bisection steps along `ln R0` when locating a frontier point.
    pub bisect_depth: usize,
    /// Simplex settings for the per-node refits of `(beta, S0, I0)`.
    pub refit: OptimizerConfig,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            slack: 0.15,
            grid_size: 15,
            span_decades: 3.0,
            golden_iters: 12,
            bisect_depth: 12,
            refit: OptimizerConfig { x_tol: 1e-9, f_tol: 1e-10, max_iter: 5_000, restarts: 1, ..Default::default() },
        }
    }
}

impl BoundsConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            return Err(ForecastError::InvalidConfig("slack must be nonnegative"));
        }
        if self.grid_size < 2 {
            return Err(ForecastError::InvalidConfig("grid needs at least 2 nodes per axis"));
        }
        if self.span_decades.is_nan() || self.span_decades <= 0.0 {
            return Err(ForecastError::InvalidConfig("grid span must be positive"));
        }
        self.refit.validate()?;
        Ok(())
    }
}

/// Integrate `params` over the data span plus `horizon` further weeks.
pub fn extrapolate(
    params: &ModelParams,
    data_weeks: usize,
    horizon: usize,
    integ: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    let grid: Vec<f64> = (0..data_weeks + horizon).map(|k| k as f64).collect();
    params.simulate(&grid, integ)
}

/// Index and value of the (first) maximum of `I`.
pub fn peak(traj: &Trajectory) -> Option<(usize, f64)> {
    traj.infected()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (k, v)| match acc {
            Some((_, m)) if m >= v => acc,
            _ => Some((k, v)),
        })
}

/// Time (weeks, linearly interpolated between samples) at which `I` first
/// falls to `fraction` of its maximum after the peak.
pub fn threshold_crossing(traj: &Trajectory, fraction: f64) -> Option<f64> {
    let (p, max) = peak(traj)?;
    let level = fraction * max;
    let times = traj.times();
    let states = traj.states();
    (p + 1..traj.len()).find(|&k| states[k].i <= level).map(|k| {
        let (i_prev, i_next) = (states[k - 1].i, states[k].i);
        let (t_prev, t_next) = (times[k - 1], times[k]);
        t_prev + (i_prev - level) / (i_prev - i_next) * (t_next - t_prev)
    })
}

/// Week stamp containing a crossing time measured from `t0_stamp`.
pub fn stamp_for_time(t0_stamp: WeekStamp, t: f64) -> WeekStamp {
    t0_stamp.add_weeks((t - 1e-9).ceil() as i64)
}

/// Stamp of the week in which `I` first drops to `fraction` of its peak.
pub fn threshold_date(traj: &Trajectory, fraction: f64, t0_stamp: WeekStamp) -> Option<WeekStamp> {
    threshold_crossing(traj, fraction).map(|t| stamp_for_time(t0_stamp, t))
}

/// One member of the bounded family of curves.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub params: IrSirParams,
    pub sse: f64,
    /// `None` when the curve does not reach the threshold within the horizon.
    pub crossing_week: Option<f64>,
    pub threshold_date: Option<WeekStamp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBounds {
    pub early: BoundCurve,
    pub late: BoundCurve,
    /// SSE ceiling `(1 + slack) * best SSE` used for feasibility.
    pub sse_limit: f64,
    /// Parameter-plane points evaluated, grid and refinement combined.
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Candidate {
    coords: [f64; 2],
    params: IrSirParams,
    sse: f64,
    crossing: Option<f64>,
}

impl Candidate {
    /// Crossing time with "never" ordered after every finite time.
    fn key(&self) -> f64 {
        self.crossing.unwrap_or(f64::INFINITY)
    }
}

struct PlaneSearch<'a> {
    objective: Objective,
    data_weeks: usize,
    thresh: &'a ThresholdConfig,
    refit: &'a OptimizerConfig,
    limit: f64,
    evaluations: AtomicUsize,
}

impl PlaneSearch<'_> {
    /// Refit `(beta, S0, I0)` with `(ln R0, ln nu)` pinned at `coords`,
    /// starting from `warm`.
    fn evaluate(&self, coords: [f64; 2], warm: &IrSirParams) -> Candidate {
        let [ln_r0, ln_nu] = coords;
        let full = |x: &[f64]| [x[0], ln_nu, x[1], x[2], ln_r0];
        let start = [warm.beta.ln(), warm.s0.ln(), warm.i0.ln()];
        let f = |x: &[f64]| self.objective.evaluate_coords(&full(x));
        let x = match polished_minimum(f, &start, self.refit) {
            Ok(m) => m.x,
            Err(_) => start.to_vec(),
        };
        let ModelParams::IrSir(params) = self.objective.params_from_coords(&full(&x)) else {
            unreachable!("objective is irSIR")
        };
        // Post hoc check on a fresh integration.
        let sse = self.objective.evaluate(&params.into());
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let crossing = extrapolate(&params.into(), self.data_weeks, self.thresh.horizon, &self.objective.integrator)
            .ok()
            .and_then(|traj| threshold_crossing(&traj, self.thresh.fraction));
        Candidate { coords, params, sse, crossing }
    }

    fn feasible(&self, c: &Candidate) -> bool {
        c.sse <= self.limit
    }
}

/// Search for the earliest and latest threshold dates among irSIR curves
/// whose SSE stays within `(1 + slack)` of the best fit.
pub fn prediction_bounds(
    data: &WeeklySeries,
    best: &FitResult,
    bounds: &BoundsConfig,
    thresh: &ThresholdConfig,
    integ: &IntegratorConfig,
) -> Result<PredictionBounds, ForecastError> {
    bounds.validate()?;
    thresh.validate()?;
    let ModelParams::IrSir(best_params) = best.params else {
        return Err(ForecastError::NotIrSir(best.params.kind()));
    };

    let best_traj = extrapolate(&best.params, data.len(), thresh.horizon, integ)?;
    let best_crossing = threshold_crossing(&best_traj, thresh.fraction);
    let t0 = data.start();
    let to_curve = |c: &Candidate| BoundCurve {
        params: c.params,
        sse: c.sse,
        crossing_week: c.crossing,
        threshold_date: c.crossing.map(|t| stamp_for_time(t0, t)),
    };
    let best_candidate = Candidate {
        coords: [best_params.r0.ln(), best_params.nu.ln()],
        params: best_params,
        sse: best.sse,
        crossing: best_crossing,
    };
    let limit = (1.0 + bounds.slack) * best.sse;

    if bounds.slack == 0.0 {
        let curve = to_curve(&best_candidate);
        return Ok(PredictionBounds { early: curve.clone(), late: curve, sse_limit: limit, evaluations: 0 });
    }

    let search = PlaneSearch {
        objective: Objective::new(data.clone(), ModelKind::IrSir, *integ),
        data_weeks: data.len(),
        thresh,
        refit: &bounds.refit,
        limit,
        evaluations: AtomicUsize::new(0),
    };

    let g = bounds.grid_size;
    let half = bounds.span_decades * std::f64::consts::LN_10;
    let step = 2.0 * half / (g - 1) as f64;
    let nodes: Vec<[f64; 2]> = (0..g)
        .flat_map(|a| (0..g).map(move |b| (a, b)))
        .map(|(a, b)| {
            [
                best_candidate.coords[0] - half + a as f64 * step,
                best_candidate.coords[1] - half + b as f64 * step,
            ]
        })
        .collect();
    let scanned: Vec<Candidate> = nodes.par_iter().map(|&c| search.evaluate(c, &best_params)).collect();

    let mut feasible: Vec<&Candidate> = std::iter::once(&best_candidate).collect();
    feasible.extend(scanned.iter().filter(|c| search.feasible(c)));

    // Ties resolve to the earliest candidate in scan order (best fit first).
    let early_seed = feasible.iter().copied().fold(&best_candidate, |acc, c| if c.key() < acc.key() { c } else { acc });
    let late_seed = feasible.iter().copied().fold(&best_candidate, |acc, c| if c.key() > acc.key() { c } else { acc });

    let (early_seed, late_seed) = (early_seed.clone(), late_seed.clone());
    let (early, late) = rayon::join(
        || search.refine(early_seed, Side::Early, step, bounds.golden_iters, bounds.bisect_depth),
        || search.refine(late_seed, Side::Late, step, bounds.golden_iters, bounds.bisect_depth),
    );
    let evaluations = search.evaluations.load(Ordering::Relaxed);

    Ok(PredictionBounds { early: to_curve(&early), late: to_curve(&late), sse_limit: limit, evaluations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Early,
    Late,
}

impl Side {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Side::Early => a < b,
            Side::Late => a > b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Side::Early => f64::INFINITY,
            Side::Late => f64::NEG_INFINITY,
        }
    }

    /// Direction along `ln R0` that brings the decline forward (early) or
    /// pushes it back (late): a larger recovered seed starts abandonment
    /// sooner.
    fn r0_direction(self) -> f64 {
        match self {
            Side::Early => 1.0,
            Side::Late => -1.0,
        }
    }
}

const MAX_BRACKET_STEPS: usize = 8;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

impl PlaneSearch<'_> {
    /// Refit `(beta, S0, I0, R0)` with `nu` pinned.
    fn profile(&self, ln_nu: f64, warm: &IrSirParams) -> Candidate {
        let full = |x: &[f64]| [x[0], ln_nu, x[1], x[2], x[3]];
        let start = [warm.beta.ln(), warm.s0.ln(), warm.i0.ln(), warm.r0.ln()];
        let f = |x: &[f64]| self.objective.evaluate_coords(&full(x));
        let x = polished_minimum(f, &start, self.refit).map(|m| m.x).unwrap_or_else(|_| start.to_vec());
        let ModelParams::IrSir(fitted) = self.objective.params_from_coords(&full(&x)) else {
            unreachable!("objective is irSIR")
        };
        self.evaluate([x[3], ln_nu], &fitted)
    }

    /// Last feasible point along `ln R0` at fixed `nu`, walking from the
    /// profile minimum in the side's direction: step out until the SSE
    /// ceiling is crossed, then bisect.
    fn frontier(&self, ln_nu: f64, warm: &IrSirParams, side: Side, step: f64, depth: usize) -> Option<Candidate> {
        let mut inner = self.profile(ln_nu, warm);
        if !self.feasible(&inner) {
            return None;
        }
        let dir = side.r0_direction();
        let mut outer = None;
        for _ in 0..MAX_BRACKET_STEPS {
            let probe = self.evaluate([inner.coords[0] + dir * step, ln_nu], &inner.params);
            if self.feasible(&probe) {
                inner = probe;
            } else {
                outer = Some(probe.coords[0]);
                break;
            }
        }
        let Some(mut outer) = outer else { return Some(inner) };
        for _ in 0..depth {
            let mid = 0.5 * (inner.coords[0] + outer);
            let probe = self.evaluate([mid, ln_nu], &inner.params);
            if self.feasible(&probe) {
                inner = probe;
            } else {
                outer = mid;
            }
        }
        Some(inner)
    }

    /// Golden-section search over `ln nu` within one grid step of `seed`,
    /// scoring each `nu` by its frontier point. Returns the most extreme
    /// feasible candidate seen, `seed` included.
    fn refine(&self, seed: Candidate, side: Side, step: f64, golden_iters: usize, bisect_depth: usize) -> Candidate {
        let warm = seed.params;
        let mut best = seed;
        let consider = |c: Option<Candidate>, best: &mut Candidate| -> f64 {
            match c {
                Some(c) => {
                    let key = c.key();
                    if side.better(key, best.key()) {
                        *best = c;
                    }
                    key
                }
                None => side.worst(),
            }
        };
        // Golden section minimizes, so flip the sign for the late side.
        let score = |key: f64| if side == Side::Early { key } else { -key };

        let centre = best.coords[1];
        let at_centre = self.frontier(centre, &warm, side, step, bisect_depth);
        consider(at_centre, &mut best);
        if !best.key().is_finite() {
            return best;
        }

        let (mut a, mut b) = (centre - step, centre + step);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = score(consider(self.frontier(x1, &warm, side, step, bisect_depth), &mut best));
        let mut f2 = score(consider(self.frontier(x2, &warm, side, step, bisect_depth), &mut best));
        for _ in 0..golden_iters {
            if !best.key().is_finite() {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = score(consider(self.frontier(x1, &warm, side, step, bisect_depth), &mut best));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = score(consider(self.frontier(x2, &warm, side, step, bisect_depth), &mut best));
            }
        }
        best
    }
}

/// Everything a caller needs to present a forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub best_curve: Trajectory,
    pub peak_value: f64,
    pub peak_date: WeekStamp,
    pub crossing_week: Option<f64>,
    pub threshold_date: Option<WeekStamp>,
    pub bounds: Option<PredictionBounds>,
}

/// Extrapolate the best fit and, when `bounds` is given, search the
/// prediction bounds around it.
pub fn forecast(
    data: &WeeklySeries,
    best: &FitResult,
    thresh: &ThresholdConfig,
    bounds: Option<&BoundsConfig>,
    integ: &IntegratorConfig,
) -> Result<ForecastReport, ForecastError> {
    thresh.validate()?;
    let best_curve = extrapolate(&best.params, data.len(), thresh.horizon, integ)?;
    let (peak_index, peak_value) = peak(&best_curve).expect("extrapolated curve is nonempty");
    let crossing_week = threshold_crossing(&best_curve, thresh.fraction);
    let bounds = bounds.map(|b| prediction_bounds(data, best, b, thresh, integ)).transpose()?;
    Ok(ForecastReport {
        peak_value,
        peak_date: data.stamp_at(peak_index),
        crossing_week,
        threshold_date: crossing_week.map(|t| stamp_for_time(data.start(), t)),
        best_curve,
        bounds,
    })
}
