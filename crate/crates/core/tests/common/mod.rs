#![allow(dead_code)]

use irsir::{IntegratorConfig, IrSirParams, ModelParams, WeekStamp, WeeklySeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Week ending on the first Saturday of 2004, the start of the query record.
pub fn t0() -> WeekStamp {
    WeekStamp::from_ymd(2004, 1, 3).unwrap()
}

/// Parameters used for the synthetic recovery checks.
pub fn synthetic_truth() -> IrSirParams {
    IrSirParams { beta: 0.06, nu: 0.03, s0: 92.0, i0: 0.1, r0: 0.7 }
}

/// Build an irSIR parameter row from `N` and the tabulated fractions of it.
pub fn table_row(beta: f64, nu: f64, i_frac: f64, r_frac: f64, n: f64) -> IrSirParams {
    IrSirParams { beta, nu, s0: n * (1.0 - i_frac - r_frac), i0: n * i_frac, r0: n * r_frac }
}

pub fn facebook_best() -> IrSirParams {
    table_row(3.36e-2, 4.98e-2, 6.43e-5, 2.35e-6, 94.5)
}

/// `I(t)` at weeks `0..weeks`, plus Gaussian noise of standard deviation
/// `sigma`, clamped at zero.
pub fn noisy_series(params: &ModelParams, weeks: usize, sigma: f64, seed: u64) -> WeeklySeries {
    let grid: Vec<f64> = (0..weeks).map(|k| k as f64).collect();
    let traj = params.simulate(&grid, &IntegratorConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let values = traj
        .infected()
        .map(|i| if sigma > 0.0 { (i + noise.sample(&mut rng)).max(0.0) } else { i })
        .collect();
    WeeklySeries::new(t0(), values).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
