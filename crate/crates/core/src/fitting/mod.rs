//! Least-squares calibration of SIR and irSIR models against weekly data.
//!
//! The objective is the plain sum of squared differences between the model's
//! infected curve `I(t)` at integer week offsets and the observed values.
//! Parameters are searched in log space so every candidate is positive, and
//! several jittered simplex runs are merged by lowest SSE.

mod nelder_mead;

pub use nelder_mead::{nelder_mead, Minimum};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::models::{IrSirParams, ModelKind, ModelParams, SirParams};
use crate::ode::{IntegrationError, IntegratorConfig, Trajectory};
use crate::timeseries::WeeklySeries;

/// SSE assigned to parameter sets whose integration fails.
pub const DEFAULT_PENALTY: f64 = 1e12;

/// Passes of the simplex per restart; each pass restarts from the best vertex
/// of the previous one with a fresh simplex.
const POLISH_PASSES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("curve has {curve} samples but data has {data}")]
    LengthMismatch { curve: usize, data: usize },
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("starting point has no coordinates")]
    EmptyStart,
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("initial guess is a {given} parameter set but a {expected} fit was requested")]
    KindMismatch { expected: ModelKind, given: ModelKind },
    #[error("all {restarts} restarts failed to integrate (every evaluation returned the penalty {penalty})")]
    AllRestartsFailed { restarts: usize, penalty: f64 },
    #[error("integration of the best parameters failed: {0}")]
    Integration(#[from] IntegrationError),
}

/// Controls for the simplex search and its restarts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub x_tol: f64,
    pub f_tol: f64,
    /// Iteration cap per simplex pass.
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Edge length of the initial simplex, in the optimizer's coordinates.
    pub simplex_step: f64,
    /// Standard deviation of the log-space jitter applied to restarts after
    /// the first.
    pub jitter: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            x_tol: 1e-10,
            f_tol: 1e-10,
            max_iter: 20_000,
            restarts: 20,
            seed: 0,
            simplex_step: 0.2,
            jitter: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(FitError::InvalidConfig("tolerances must be positive"));
        }
        if self.max_iter == 0 {
            return Err(FitError::InvalidConfig("max_iter must be positive"));
        }
        if self.restarts == 0 {
            return Err(FitError::InvalidConfig("restarts must be at least 1"));
        }
        if !(self.simplex_step > 0.0 && self.jitter >= 0.0) {
            return Err(FitError::InvalidConfig("simplex step must be positive and jitter nonnegative"));
        }
        Ok(())
    }
}

/// Best parameters found by [`fit_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub sse: f64,
    pub n_evals: usize,
    /// Whether the winning restart met both tolerances.
    pub converged: bool,
    pub restarts_used: usize,
    /// Index of the restart that produced `params`.
    pub best_restart: usize,
}

/// Sum of squared residuals between `curve`'s infected compartment and the
/// data values, all weeks weighted equally.
pub fn sse(curve: &Trajectory, data: &WeeklySeries) -> Result<f64, FitError> {
    if curve.len() != data.len() {
        return Err(FitError::LengthMismatch { curve: curve.len(), data: data.len() });
    }
    Ok(curve.infected().zip(data.values()).map(|(model, obs)| (model - obs).powi(2)).sum())
}

/// The SSE objective over log-transformed parameters.
///
/// Coordinates are `ln(beta), ln(gamma | nu), ln(S0), ln(I0)` plus `ln(R0)`
/// for irSIR. SIR fits pin `R0 = 0`.
#[derive(Debug, Clone)]
pub struct Objective {
    pub data: WeeklySeries,
    pub kind: ModelKind,
    pub integrator: IntegratorConfig,
    pub penalty: f64,
    grid: Vec<f64>,
}

impl Objective {
    pub fn new(data: WeeklySeries, kind: ModelKind, integrator: IntegratorConfig) -> Self {
        let grid = data.week_grid();
        Objective { data, kind, integrator, penalty: DEFAULT_PENALTY, grid }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn params_from_coords(&self, x: &[f64]) -> ModelParams {
        let e = |k: usize| x[k].exp();
        match self.kind {
            ModelKind::Sir => SirParams { beta: e(0), gamma: e(1), s0: e(2), i0: e(3), r0: 0.0 }.into(),
            ModelKind::IrSir => IrSirParams { beta: e(0), nu: e(1), s0: e(2), i0: e(3), r0: e(4) }.into(),
        }
    }

    pub fn coords_from_params(params: &ModelParams) -> Vec<f64> {
        match params {
            ModelParams::Sir(p) => vec![p.beta.ln(), p.gamma.ln(), p.s0.ln(), p.i0.ln()],
            ModelParams::IrSir(p) => vec![p.beta.ln(), p.nu.ln(), p.s0.ln(), p.i0.ln(), p.r0.ln()],
        }
    }

    /// Model curve at the data weeks.
    pub fn curve(&self, params: &ModelParams) -> Result<Trajectory, IntegrationError> {
        params.simulate(&self.grid, &self.integrator)
    }

    /// SSE of `params`, or the penalty when the parameters are invalid or
    /// the integration fails.
    pub fn evaluate(&self, params: &ModelParams) -> f64 {
        if params.validate().is_err() {
            return self.penalty;
        }
        match self.curve(params) {
            Ok(curve) => {
                let v: f64 = curve.infected().zip(self.data.values()).map(|(m, o)| (m - o).powi(2)).sum();
                if v.is_finite() {
                    v.min(self.penalty)
                } else {
                    self.penalty
                }
            }
            Err(_) => self.penalty,
        }
    }

    pub fn evaluate_coords(&self, x: &[f64]) -> f64 {
        self.evaluate(&self.params_from_coords(x))
    }
}

/// Starting point used when the caller supplies none: `S0` at the data
/// maximum, `I0` at the first observation (floored at 0.01), `R0` at 1% of
/// `S0` for irSIR, and both rates at 0.05 per week.
pub fn default_initial_guess(data: &WeeklySeries, kind: ModelKind) -> ModelParams {
    let s0 = data.max_value().max(1e-3);
    let i0 = data.values()[0].max(0.01);
    match kind {
        ModelKind::Sir => SirParams { beta: 0.05, gamma: 0.05, s0, i0, r0: 0.0 }.into(),
        ModelKind::IrSir => IrSirParams { beta: 0.05, nu: 0.05, s0, i0, r0: 0.01 * s0 }.into(),
    }
}

/// Run a simplex search from `start`, re-seeding a fresh simplex at the best
/// vertex until a pass no longer improves the objective.
pub fn polished_minimum<F>(f: F, start: &[f64], config: &OptimizerConfig) -> Result<Minimum, FitError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = nelder_mead(&f, start, config)?;
    for _ in 1..POLISH_PASSES {
        let next = nelder_mead(&f, &best.x, config)?;
        let improved = best.f - next.f > config.f_tol * best.f.abs().max(1.0);
        let evals = best.n_evals + next.n_evals;
        let iterations = best.iterations + next.iterations;
        if next.f <= best.f {
            best = Minimum { n_evals: evals, iterations, ..next };
        } else {
            best.n_evals = evals;
            best.iterations = iterations;
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Fit `kind` to `data` by minimizing the SSE of `I(t)`.
///
/// Restart 0 starts from `init` (or [`default_initial_guess`]); restart `k`
/// multiplies each parameter by an independent log-normal factor drawn from
/// a stream keyed by `(seed, k)`. Restarts run in parallel on the current
/// rayon pool; the lowest SSE wins, ties going to the lowest restart index.
/// The reported SSE comes from re-integrating the winning parameters.
pub fn fit_model(
    data: &WeeklySeries,
    kind: ModelKind,
    init: Option<ModelParams>,
    opt: &OptimizerConfig,
    integ: &IntegratorConfig,
) -> Result<FitResult, FitError> {
    opt.validate()?;
    integ.validate()?;
    let start = init.unwrap_or_else(|| default_initial_guess(data, kind));
    if start.kind() != kind {
        return Err(FitError::KindMismatch { expected: kind, given: start.kind() });
    }
    let objective = Objective::new(data.clone(), kind, *integ);
    let base = Objective::coords_from_params(&start);
    if base.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteStart);
    }

    let outcomes: Vec<Option<Minimum>> = (0..opt.restarts)
        .into_par_iter()
        .map(|k| {
            let mut x0 = base.clone();
            if k > 0 && opt.jitter > 0.0 {
                let mut rng = restart_rng(opt.seed, k);
                let normal = Normal::new(0.0, opt.jitter).expect("jitter is finite and nonnegative");
                for v in x0.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
            polished_minimum(|x| objective.evaluate_coords(x), &x0, opt).ok()
        })
        .collect();

    let n_evals = outcomes.iter().flatten().map(|m| m.n_evals).sum();
    let (best_restart, best) = outcomes
        .into_iter()
        .enumerate()
        .filter_map(|(k, m)| m.map(|m| (k, m)))
        .filter(|(_, m)| m.f < objective.penalty)
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .ok_or(FitError::AllRestartsFailed { restarts: opt.restarts, penalty: objective.penalty })?;

    let params = objective.params_from_coords(&best.x);
    let curve = objective.curve(&params)?;
    let sse = sse(&curve, data)?;
    Ok(FitResult { params, sse, n_evals, converged: best.converged, restarts_used: opt.restarts, best_restart })
}
