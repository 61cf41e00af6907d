//! Epidemic-model calibration for weekly activity series.
//!
//! The crate fits the classical SIR model and the infectious-recovery SIR
//! (irSIR) model to weekly, max-normalized activity data and extrapolates
//! the fitted curves to estimate when activity falls to a fraction of its
//! peak.
//!
//! * [`timeseries`]: CSV ingestion, stitching, step correction, normalization.
//! * [`ode`]: adaptive Dormand-Prince 4(5) integration with dense output.
//! * [`models`]: right-hand sides, parameter bundles, immunization criteria.
//! * [`fitting`]: SSE objective and multi-start Nelder-Mead search.
//! * [`forecast`]: extrapolation, threshold dates and prediction bounds.
//!
//! ```
//! use irsir::models::{IrSirParams, ModelParams};
//! use irsir::ode::IntegratorConfig;
//!
//! let params: ModelParams = IrSirParams { beta: 0.06, nu: 0.03, s0: 92.0, i0: 0.1, r0: 0.7 }.into();
//! let grid: Vec<f64> = (0..400).map(f64::from).collect();
//! let traj = params.simulate(&grid, &IntegratorConfig::default()).unwrap();
//! let total = traj.last().unwrap().total();
//! assert!((total - params.population()).abs() < 1e-6 * params.population());
//! ```

pub mod fitting;
pub mod forecast;
pub mod models;
pub mod ode;
pub mod timeseries;

pub use fitting::{fit_model, FitError, FitResult, OptimizerConfig};
pub use forecast::{BoundsConfig, ForecastReport, PredictionBounds, ThresholdConfig};
pub use models::{IrSirParams, ModelKind, ModelParams, SirParams};
pub use ode::{IntegratorConfig, StateVector, Trajectory};
pub use timeseries::{WeekStamp, WeeklySeries};
