//! Adaptive Dormand-Prince 4(5) integration of three-compartment systems.
//!
//! The integrator steps freely (bounded by `max_step`) and samples the
//! caller's grid through the method's 4th-order continuous extension, so
//! output times never constrain the step-size controller.
//!
//! Time is measured in weeks everywhere in this crate.

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

/// Compartment sizes (S, I, R) at one instant, in population units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl StateVector {
    pub const fn new(s: f64, i: f64, r: f64) -> Self {
        StateVector { s, i, r }
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.i.is_finite() && self.r.is_finite()
    }

    pub fn min_component(&self) -> f64 {
        self.s.min(self.i).min(self.r)
    }

    fn abs_max(&self, other: &StateVector) -> StateVector {
        StateVector::new(
            self.s.abs().max(other.s.abs()),
            self.i.abs().max(other.i.abs()),
            self.r.abs().max(other.r.abs()),
        )
    }
}

impl Add for StateVector {
    type Output = StateVector;
    fn add(self, o: StateVector) -> StateVector {
        StateVector::new(self.s + o.s, self.i + o.i, self.r + o.r)
    }
}

impl Sub for StateVector {
    type Output = StateVector;
    fn sub(self, o: StateVector) -> StateVector {
        StateVector::new(self.s - o.s, self.i - o.i, self.r - o.r)
    }
}

impl Mul<StateVector> for f64 {
    type Output = StateVector;
    fn mul(self, v: StateVector) -> StateVector {
        StateVector::new(self * v.s, self * v.i, self * v.r)
    }
}

/// An autonomous right-hand side `dy/dt = f(y)`.
pub trait OdeSystem {
    fn rhs(&self, y: &StateVector) -> StateVector;

    /// Whether an accepted state is physically meaningful. Returning false
    /// aborts the integration with [`IntegrationError::Inadmissible`].
    fn admissible(&self, _y: &StateVector) -> bool {
        true
    }
}

impl<F> OdeSystem for F
where
    F: Fn(&StateVector) -> StateVector,
{
    fn rhs(&self, y: &StateVector) -> StateVector {
        self(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Per-step error is held below `abs_tol + rel_tol * |y|` componentwise.
    pub rel_tol: f64,
    /// Absolute tolerance in population units.
    pub abs_tol: f64,
    /// First trial step, in weeks.
    pub initial_step: f64,
    /// Largest step the controller may take, in weeks.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    /// `abs_tol` is 1e-10 of a population of 100, the scale of normalized
    /// series.
    fn default() -> Self {
        IntegratorConfig { rel_tol: 1e-8, abs_tol: 1e-8, initial_step: 0.1, max_step: 10.0, max_steps: 10_000 }
    }
}

impl IntegratorConfig {
    /// Default tolerances with `abs_tol = 1e-10 * population`.
    pub fn for_population(population: f64) -> Self {
        IntegratorConfig { abs_tol: 1e-10 * population, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.initial_step > 0.0
            && self.initial_step <= self.max_step
            && self.max_step.is_finite()
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(IntegrationError::InvalidConfig)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IntegrationError {
    #[error("invalid integrator configuration")]
    InvalidConfig,
    #[error("output grid must be nonempty, finite and strictly increasing")]
    InvalidGrid,
    #[error("step budget exhausted at t = {t}")]
    MaxStepsExceeded { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state after t = {t}")]
    NonFinite { t: f64 },
    #[error("state left the admissible region after t = {t}")]
    Inadmissible { t: f64 },
}

impl IntegrationError {
    /// Last time at which the solution was still valid, when known.
    pub fn last_good_time(&self) -> Option<f64> {
        match *self {
            IntegrationError::MaxStepsExceeded { t }
            | IntegrationError::StepSizeUnderflow { t }
            | IntegrationError::NonFinite { t }
            | IntegrationError::Inadmissible { t } => Some(t),
            _ => None,
        }
    }
}

/// States sampled at a strictly increasing list of times.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVector>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<StateVector>) -> Option<Self> {
        let ok = times.len() == states.len() && times.windows(2).all(|w| w[0] < w[1]);
        ok.then_some(Trajectory { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn infected(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|y| y.i)
    }

    pub fn last(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// The first `n` samples.
    pub fn truncated(&self, n: usize) -> Trajectory {
        let n = n.min(self.len());
        Trajectory { times: self.times[..n].to_vec(), states: self.states[..n].to_vec() }
    }
}

// Dormand-Prince 5(4) tableau. The system is autonomous, so the node
// fractions c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer, Norsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Dense-output coefficients of one accepted step.
struct Interpolant {
    t: f64,
    h: f64,
    r1: StateVector,
    r2: StateVector,
    r3: StateVector,
    r4: StateVector,
    r5: StateVector,
}

impl Interpolant {
    fn eval(&self, t: f64) -> StateVector {
        let theta = (t - self.t) / self.h;
        let one_minus = 1.0 - theta;
        self.r1 + theta * (self.r2 + one_minus * (self.r3 + theta * (self.r4 + one_minus * self.r5)))
    }
}

/// Integrate `system` from `y0` at `grid[0]` and return the solution at every
/// grid time.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    y0: StateVector,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    let valid_grid = !grid.is_empty()
        && grid.iter().all(|t| t.is_finite())
        && grid.windows(2).all(|w| w[0] < w[1]);
    if !valid_grid {
        return Err(IntegrationError::InvalidGrid);
    }
    if !y0.is_finite() {
        return Err(IntegrationError::NonFinite { t: grid[0] });
    }

    let mut states = Vec::with_capacity(grid.len());
    states.push(y0);
    let t_end = grid[grid.len() - 1];
    let mut next_out = 1;

    let mut t = grid[0];
    let mut y = y0;
    let mut k1 = system.rhs(&y);
    if !k1.is_finite() {
        return Err(IntegrationError::NonFinite { t });
    }
    let mut h = config.initial_step.min(config.max_step);
    let mut steps = 0usize;
    let mut rejected_last = false;

    while next_out < grid.len() {
        if steps >= config.max_steps {
            return Err(IntegrationError::MaxStepsExceeded { t });
        }
        steps += 1;

        let remaining = t_end - t;
        let mut h_step = h.min(remaining);
        // Avoid a sliver of a step just before the end.
        if remaining - h_step < 1e-3 * h_step {
            h_step = remaining;
        }
        if h_step <= 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepSizeUnderflow { t });
        }

        let k2 = system.rhs(&(y + (h_step * A21) * k1));
        let k3 = system.rhs(&(y + h_step * (A31 * k1 + A32 * k2)));
        let k4 = system.rhs(&(y + h_step * (A41 * k1 + A42 * k2 + A43 * k3)));
        let k5 = system.rhs(&(y + h_step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
        let k6 = system.rhs(&(y + h_step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
        let y_new = y + h_step * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = system.rhs(&y_new);

        let err_vec = h_step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = y.abs_max(&y_new);
        let err = [
            (err_vec.s, scale.s),
            (err_vec.i, scale.i),
            (err_vec.r, scale.r),
        ]
        .iter()
        .map(|&(e, sc)| e.abs() / (config.abs_tol + config.rel_tol * sc))
        .fold(0.0, f64::max);

        if !err.is_finite() || !y_new.is_finite() || !k7.is_finite() {
            h = h_step * MIN_FACTOR;
            rejected_last = true;
            continue;
        }

        if err > 1.0 {
            let factor = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
            h = h_step * factor.min(1.0);
            rejected_last = true;
            continue;
        }

        if !system.admissible(&y_new) {
            return Err(IntegrationError::Inadmissible { t });
        }

        let t_new = if h_step == remaining { t_end } else { t + h_step };
        if next_out < grid.len() && grid[next_out] <= t_new {
            let ydiff = y_new - y;
            let bspl = h_step * k1 - ydiff;
            let dense = Interpolant {
                t,
                h: t_new - t,
                r1: y,
                r2: ydiff,
                r3: bspl,
                r4: ydiff - h_step * k7 - bspl,
                r5: h_step * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            };
            while next_out < grid.len() && grid[next_out] <= t_new {
                let tq = grid[next_out];
                let yq = if tq == t_new { y_new } else { dense.eval(tq) };
                states.push(yq);
                next_out += 1;
            }
        }

        t = t_new;
        y = y_new;
        k1 = k7;

        let mut factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * err.powf(-0.2) };
        factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
        if rejected_last {
            factor = factor.min(1.0);
        }
        rejected_last = false;
        h = (h_step * factor).min(config.max_step);
    }

    Ok(Trajectory { times: grid.to_vec(), states })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> IntegratorConfig {
        IntegratorConfig { abs_tol: 1e-14, ..Default::default() }
    }

    #[test]
    fn zero_rhs_keeps_state() {
        let y0 = StateVector::new(1.0, 2.0, 3.0);
        let traj = integrate(&|_: &StateVector| StateVector::default(), y0, &[0.0, 1.0, 2.0], &tight()).unwrap();
        assert_eq!(traj.states(), &[y0, y0, y0]);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let decay = |y: &StateVector| -1.0 * *y;
        let y0 = StateVector::new(1.0, 1.0, 1.0);
        let traj = integrate(&decay, y0, &[0.0, 0.5, 1.0], &tight()).unwrap();
        let expect = (-1.0f64).exp();
        for v in [traj.states()[2].s, traj.states()[2].i, traj.states()[2].r] {
            assert!((v - expect).abs() < 1e-8);
        }
        // Dense-output sample in the middle of the span.
        assert!((traj.states()[1].s - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn single_point_grid_returns_initial_state() {
        let y0 = StateVector::new(1.0, 0.0, 0.0);
        let traj = integrate(&|y: &StateVector| *y, y0, &[0.0], &tight()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states()[0], y0);
    }

    #[test]
    fn grid_and_config_are_validated() {
        let f = |y: &StateVector| *y;
        let y0 = StateVector::new(1.0, 0.0, 0.0);
        assert_eq!(integrate(&f, y0, &[], &tight()), Err(IntegrationError::InvalidGrid));
        assert_eq!(integrate(&f, y0, &[0.0, 0.0], &tight()), Err(IntegrationError::InvalidGrid));
        let bad = IntegratorConfig { initial_step: 20.0, ..Default::default() };
        assert_eq!(integrate(&f, y0, &[0.0, 1.0], &bad), Err(IntegrationError::InvalidConfig));
    }

    #[test]
    fn step_budget_is_enforced() {
        let f = |y: &StateVector| *y;
        let cfg = IntegratorConfig { max_steps: 3, max_step: 0.1, initial_step: 0.1, ..Default::default() };
        let err = integrate(&f, StateVector::new(1.0, 1.0, 1.0), &[0.0, 100.0], &cfg).unwrap_err();
        assert!(matches!(err, IntegrationError::MaxStepsExceeded { .. }));
        assert!(err.last_good_time().unwrap() > 0.0);
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y^2 explodes at t = 1.
        let f = |y: &StateVector| StateVector::new(y.s * y.s, 0.0, 0.0);
        let err = integrate(&f, StateVector::new(1.0, 0.0, 0.0), &[0.0, 2.0], &tight()).unwrap_err();
        assert!(err.last_good_time().unwrap() < 1.0 + 1e-6, "{err:?}");
    }

    struct Positive;
    impl OdeSystem for Positive {
        fn rhs(&self, _y: &StateVector) -> StateVector {
            StateVector::new(-1.0, 0.0, 0.0)
        }
        fn admissible(&self, y: &StateVector) -> bool {
            y.s >= 0.0
        }
    }

    #[test]
    fn inadmissible_state_aborts() {
        let err = integrate(&Positive, StateVector::new(1.0, 0.0, 0.0), &[0.0, 5.0], &tight()).unwrap_err();
        assert!(matches!(err, IntegrationError::Inadmissible { .. }));
    }
}
