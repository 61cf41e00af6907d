#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use irsir::timeseries::to_csv;
use irsir::{IntegratorConfig, IrSirParams, ModelParams, WeekStamp, WeeklySeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn t0() -> WeekStamp {
    WeekStamp::from_ymd(2004, 1, 3).unwrap()
}

pub fn synthetic_truth() -> IrSirParams {
    IrSirParams { beta: 0.06, nu: 0.03, s0: 92.0, i0: 0.1, r0: 0.7 }
}

pub fn table_row(beta: f64, nu: f64, i_frac: f64, r_frac: f64, n: f64) -> IrSirParams {
    IrSirParams { beta, nu, s0: n * (1.0 - i_frac - r_frac), i0: n * i_frac, r0: n * r_frac }
}

pub fn facebook_best() -> IrSirParams {
    table_row(3.36e-2, 4.98e-2, 6.43e-5, 2.35e-6, 94.5)
}

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

/// Facebook-like record ending just after the decline sets in.
pub fn truncated_decline() -> WeeklySeries {
    noisy_series(&facebook_best().into(), 520, 1.5, 1)
}

pub fn write_series(dir: &Path, name: &str, series: &WeeklySeries) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, to_csv(series)).unwrap();
    path
}

pub fn irsir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsir")).args(args).env_remove("IRSIR_OUT_DIR").output().unwrap()
}
