//! SIR and infectious-recovery SIR (irSIR) dynamics.
//!
//! Both systems conserve `N = S + I + R`. In the classical SIR model the
//! infected compartment recovers at a constant per-capita rate `gamma`. In
//! irSIR, recovery itself spreads by contact: the flow from I to R is
//! `nu * I * R / N`, so a population with no recovered members never
//! recovers at all.
//!
//! `N` is always derived from the initial compartments and never stored.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ode::{integrate, IntegrationError, IntegratorConfig, OdeSystem, StateVector, Trajectory};

/// Relative undershoot below zero tolerated before a state is rejected.
pub const NEGATIVE_STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Sir,
    IrSir,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sir => "sir",
            ModelKind::IrSir => "irsir",
        }
    }

    /// Number of free parameters during fitting (SIR pins `R0 = 0`).
    pub fn fit_dimension(self) -> usize {
        match self {
            ModelKind::Sir => 4,
            ModelKind::IrSir => 5,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sir" => Ok(ModelKind::Sir),
            "irsir" => Ok(ModelKind::IrSir),
            other => Err(format!("unknown model {other:?}, expected `sir` or `irsir`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
}

fn check(name: &'static str, value: f64, ok: bool) -> Result<(), ModelError> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { name, value })
    }
}

/// Classical SIR parameters. Rates are per week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    pub beta: f64,
    pub gamma: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
}

impl SirParams {
    pub fn population(&self) -> f64 {
        self.s0 + self.i0 + self.r0
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::new(self.s0, self.i0, self.r0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check("beta", self.beta, self.beta >= 0.0)?;
        check("gamma", self.gamma, self.gamma >= 0.0)?;
        check("s0", self.s0, self.s0 > 0.0)?;
        check("i0", self.i0, self.i0 > 0.0)?;
        check("r0", self.r0, self.r0 >= 0.0)
    }
}

/// irSIR parameters. `nu` is the infectious recovery rate, per week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrSirParams {
    pub beta: f64,
    pub nu: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
}

impl IrSirParams {
    pub fn population(&self) -> f64 {
        self.s0 + self.i0 + self.r0
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::new(self.s0, self.i0, self.r0)
    }

    /// Accepts `r0 = 0` (the frozen-recovery limit) even though fitted
    /// parameter sets always have `r0 > 0`.
    pub fn validate(&self) -> Result<(), ModelError> {
        check("beta", self.beta, self.beta >= 0.0)?;
        check("nu", self.nu, self.nu >= 0.0)?;
        check("s0", self.s0, self.s0 > 0.0)?;
        check("i0", self.i0, self.i0 > 0.0)?;
        check("r0", self.r0, self.r0 >= 0.0)
    }
}

/// `(-beta I S / N, beta I S / N - gamma I, gamma I)` with `N` taken from
/// the parameters.
pub fn sir_rhs(state: &StateVector, params: &SirParams) -> StateVector {
    let n = params.population();
    let infection = params.beta * state.i * state.s / n;
    let recovery = params.gamma * state.i;
    StateVector::new(-infection, infection - recovery, recovery)
}

/// `(-beta I S / N, beta I S / N - nu I R / N, nu I R / N)`.
pub fn irsir_rhs(state: &StateVector, params: &IrSirParams) -> StateVector {
    let n = params.population();
    let infection = params.beta * state.i * state.s / n;
    let recovery = params.nu * state.i * state.r / n;
    StateVector::new(-infection, infection - recovery, recovery)
}

/// `S0 / N < gamma / beta`: the infected compartment can never grow.
pub fn sir_immunization_satisfied(params: &SirParams) -> bool {
    if params.beta == 0.0 {
        return true;
    }
    params.s0 / params.population() < params.gamma / params.beta
}

/// `S0 / R0 < nu / beta`, obtained by requiring `dI/dt <= 0` at `t = 0`.
/// With `R0 = 0` recovery never starts, so the criterion cannot hold.
pub fn irsir_immunization_satisfied(params: &IrSirParams) -> bool {
    if params.r0 == 0.0 {
        return false;
    }
    if params.beta == 0.0 {
        return true;
    }
    params.s0 / params.r0 < params.nu / params.beta
}

fn within_floor(y: &StateVector, population: f64) -> bool {
    y.min_component() >= -NEGATIVE_STATE_TOL * population
}

impl OdeSystem for SirParams {
    fn rhs(&self, y: &StateVector) -> StateVector {
        sir_rhs(y, self)
    }

    fn admissible(&self, y: &StateVector) -> bool {
        within_floor(y, self.population())
    }
}

impl OdeSystem for IrSirParams {
    fn rhs(&self, y: &StateVector) -> StateVector {
        irsir_rhs(y, self)
    }

    fn admissible(&self, y: &StateVector) -> bool {
        within_floor(y, self.population())
    }
}

/// Either model's parameter bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Sir(SirParams),
    IrSir(IrSirParams),
}

impl From<SirParams> for ModelParams {
    fn from(p: SirParams) -> Self {
        ModelParams::Sir(p)
    }
}

impl From<IrSirParams> for ModelParams {
    fn from(p: IrSirParams) -> Self {
        ModelParams::IrSir(p)
    }
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Sir(_) => ModelKind::Sir,
            ModelParams::IrSir(_) => ModelKind::IrSir,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            ModelParams::Sir(p) => p.beta,
            ModelParams::IrSir(p) => p.beta,
        }
    }

    /// `gamma` for SIR, `nu` for irSIR.
    pub fn recovery_rate(&self) -> f64 {
        match self {
            ModelParams::Sir(p) => p.gamma,
            ModelParams::IrSir(p) => p.nu,
        }
    }

    pub fn initial_state(&self) -> StateVector {
        match self {
            ModelParams::Sir(p) => p.initial_state(),
            ModelParams::IrSir(p) => p.initial_state(),
        }
    }

    pub fn population(&self) -> f64 {
        self.initial_state().total()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelParams::Sir(p) => p.validate(),
            ModelParams::IrSir(p) => p.validate(),
        }
    }

    pub fn immunization_satisfied(&self) -> bool {
        match self {
            ModelParams::Sir(p) => sir_immunization_satisfied(p),
            ModelParams::IrSir(p) => irsir_immunization_satisfied(p),
        }
    }

    /// `(S0/N, I0/N, R0/N)`.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let y = self.initial_state();
        let n = y.total();
        (y.s / n, y.i / n, y.r / n)
    }

    /// Integrate from the initial compartments over `grid` (weeks).
    pub fn simulate(&self, grid: &[f64], config: &IntegratorConfig) -> Result<Trajectory, IntegrationError> {
        match self {
            ModelParams::Sir(p) => integrate(p, p.initial_state(), grid, config),
            ModelParams::IrSir(p) => integrate(p, p.initial_state(), grid, config),
        }
    }
}
