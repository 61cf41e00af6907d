mod common;

use irsir::forecast::extrapolate;
use irsir::{IntegratorConfig, IrSirParams, ModelParams, SirParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(weeks: usize, per_week: usize) -> Vec<f64> {
    (0..=weeks * per_week).map(|k| k as f64 / per_week as f64).collect()
}

/// Dense near zero, where short outbreaks peak, then weekly.
fn outbreak_grid(weeks: usize) -> Vec<f64> {
    (0..1000).map(|k| k as f64 * 1e-3).chain((1..=weeks).map(|k| k as f64)).collect()
}

fn random_irsir(rng: &mut ChaCha8Rng) -> IrSirParams {
    IrSirParams {
        beta: rng.random_range(0.01..1.0),
        nu: rng.random_range(0.01..1.0),
        s0: rng.random_range(1.0..100.0),
        i0: rng.random_range(0.01..10.0),
        r0: rng.random_range(0.01..10.0),
    }
}

fn random_sir(rng: &mut ChaCha8Rng) -> SirParams {
    SirParams {
        beta: rng.random_range(0.01..1.0),
        gamma: rng.random_range(0.01..1.0),
        s0: rng.random_range(1.0..100.0),
        i0: rng.random_range(0.01..10.0),
        r0: rng.random_range(0.0..10.0),
    }
}

fn max_i(p: &ModelParams, g: &[f64]) -> f64 {
    p.simulate(g, &IntegratorConfig::default()).unwrap().infected().fold(f64::MIN, f64::max)
}

#[test]
fn population_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = grid(600, 1);
    for k in 0..200 {
        let p: ModelParams = if k % 2 == 0 { random_sir(&mut rng).into() } else { random_irsir(&mut rng).into() };
        let n = p.population();
        let traj = p.simulate(&g, &IntegratorConfig::default()).unwrap();
        let drift = traj.states().iter().map(|y| (y.total() - n).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-6 * n, "{p:?}: drift {drift:e}");
    }
}

/// SIR and irSIR sets whose recovery rate is `u` times the critical value,
/// `u` drawn from `lo..hi`. Draws needing a rate above 2 per week are
/// skipped so the systems stay non-stiff.
fn scaled_pair(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (SirParams, IrSirParams) {
    let sir = loop {
        let mut p = random_sir(rng);
        p.gamma = p.beta * p.s0 / p.population() * rng.random_range(lo..hi);
        if p.gamma <= 2.0 {
            break p;
        }
    };
    let ir = loop {
        let mut p = random_irsir(rng);
        p.nu = p.beta * p.s0 / p.r0 * rng.random_range(lo..hi);
        if p.nu <= 2.0 {
            break p;
        }
    };
    (sir, ir)
}

#[test]
fn immunized_populations_never_grow() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = outbreak_grid(300);
    for _ in 0..100 {
        let (sir, ir) = scaled_pair(&mut rng, 1.05, 20.0);
        assert!(irsir::models::sir_immunization_satisfied(&sir));
        assert!(max_i(&sir.into(), &g) <= sir.i0 * (1.0 + 1e-9), "{sir:?}");
        assert!(irsir::models::irsir_immunization_satisfied(&ir));
        assert!(max_i(&ir.into(), &g) <= ir.i0 * (1.0 + 1e-9), "{ir:?}");
    }
}

#[test]
fn outbreaks_grow_when_criterion_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = outbreak_grid(300);
    for _ in 0..100 {
        let (sir, ir) = scaled_pair(&mut rng, 0.05, 0.95);
        assert!(!irsir::models::sir_immunization_satisfied(&sir));
        assert!(max_i(&sir.into(), &g) > sir.i0, "{sir:?}");
        assert!(!irsir::models::irsir_immunization_satisfied(&ir));
        assert!(max_i(&ir.into(), &g) > ir.i0, "{ir:?}");
    }
}

#[test]
fn without_recovered_seed_infection_absorbs_everyone() {
    let p = IrSirParams { r0: 0.0, ..common::synthetic_truth() };
    let n = p.population();
    let traj = ModelParams::from(p).simulate(&grid(600, 1), &IntegratorConfig::default()).unwrap();
    assert!(traj.states().iter().all(|y| y.r == 0.0));
    let end = traj.last().unwrap();
    assert!(end.i > n * (1.0 - 1e-6) && end.s < n * 1e-6, "{end:?}");
}

#[test]
fn recovered_strictly_increase_with_recovered_seed() {
    for p in [common::synthetic_truth(), common::facebook_best(), common::table_row(5.98e-2, 2.68e-2, 9.49e-4, 7.19e-3, 92.94)] {
        let traj = ModelParams::from(p).simulate(&grid(400, 1), &IntegratorConfig::default()).unwrap();
        for w in traj.states().windows(2) {
            assert!(w[1].r > w[0].r, "{p:?}: R stalls at {}", w[0].r);
        }
    }
}

#[test]
fn dynamics_are_invariant_under_population_scaling() {
    let base = common::synthetic_truth();
    let g = grid(400, 1);
    let a = ModelParams::from(base).simulate(&g, &IntegratorConfig::default()).unwrap();
    for c in [0.01, 7.5, 1000.0] {
        let scaled = IrSirParams { s0: c * base.s0, i0: c * base.i0, r0: c * base.r0, ..base };
        let cfg = IntegratorConfig::for_population(scaled.population());
        let b = ModelParams::from(scaled).simulate(&g, &cfg).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            assert!((y.i / c - x.i).abs() <= 1e-6 * base.population(), "c = {c}");
        }
    }
}

#[test]
fn sir_tail_decays_at_effective_recovery_rate() {
    let p = SirParams { beta: 0.5, gamma: 0.2, s0: 90.0, i0: 2.0, r0: 0.0 };
    let n = p.population();
    let traj = ModelParams::from(p).simulate(&[0.0, 150.0, 151.0], &IntegratorConfig::default()).unwrap();
    let (a, b) = (traj.states()[1], traj.states()[2]);
    let slope = (b.i / a.i).ln();
    let s_mid = 0.5 * (a.s + b.s);
    let want = -(p.gamma - p.beta * s_mid / n);
    assert!((slope - want).abs() < 1e-3 * want.abs(), "slope {slope} vs {want}");
}

#[test]
fn irsir_tail_empties_infected_into_recovered() {
    let p = ModelParams::from(common::synthetic_truth());
    let n = p.population();
    let traj = extrapolate(&p, 400, 4600, &IntegratorConfig::default()).unwrap();
    let tail = &traj.states()[1000..];
    for w in tail.windows(2) {
        assert!(w[1].i <= w[0].i && w[1].r >= w[0].r);
    }
    let end = traj.last().unwrap();
    assert!(end.i < 1e-6 * n && (end.r - n).abs() < 1e-3 * n, "{end:?}");
}

#[test]
fn tabulated_myspace_sir_row_is_immunized() {
    let n = 322.0;
    let p = SirParams { beta: 4.92e-2, gamma: 5.39, s0: 0.996 * n, i0: 4.1e-3 * n, r0: 0.0 };
    assert!(irsir::models::sir_immunization_satisfied(&p));
    assert!(max_i(&p.into(), &grid(100, 4)) <= p.i0 * (1.0 + 1e-9));
}
