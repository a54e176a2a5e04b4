//! Bloch-vector dynamics of a driven qubit under Markovian dephasing.
//!
//! The Hamiltonian is `omega * sigma_x / 2` with `omega = 2 pi f` and the
//! environment dephases along `sigma_z` with coupling `kappa`. Starting from
//! the `+1` eigenstate of `sigma_z`, the measured component follows
//!
//! ```text
//! rz(t) = exp(-2 kappa t) [cos(mu t) + 2 kappa sin(mu t) / mu],  mu = sqrt(omega^2 - 4 kappa^2)
//! ```
//!
//! which is the solution of the Bloch equations with transverse damping
//! rate `4 kappa`:
//!
//! ```text
//! drx/dt = -4 kappa rx
//! dry/dt = -omega rz - 4 kappa ry
//! drz/dt =  omega ry
//! ```
//!
//! [`bloch_at`] is the closed form. [`ode_evolve`] integrates the equations
//! numerically and is kept as an independent cross-check.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical model of the qubit: oscillation frequency `f` (cycles per unit
/// time) and environment coupling `kappa` (inverse time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub f: f64,
    pub kappa: f64,
}

impl QubitParams {
    /// Validates `f > 0`, `kappa >= 0` and the underdamped condition.
    pub fn new(f: f64, kappa: f64) -> Result<Self> {
        let p = Self { f, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(Error::InvalidParams(format!("f must be positive, got {}", self.f)));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        let omega = self.omega();
        if omega <= 2.0 * self.kappa {
            return Err(Error::OverdampedRegime {
                omega,
                two_kappa: 2.0 * self.kappa,
            });
        }
        Ok(())
    }

    /// Angular frequency `2 pi f`.
    pub fn omega(&self) -> f64 {
        TAU * self.f
    }

    /// Decoherence time `1 / kappa` (infinite for `kappa = 0`).
    pub fn tau(&self) -> f64 {
        1.0 / self.kappa
    }
}

/// Bloch vector `(rx, ry, rz)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
    pub t: f64,
}

impl BlochState {
    /// The `+1` eigenstate of `sigma_z` at `t = 0`.
    pub const fn initial() -> Self {
        Self {
            rx: 0.0,
            ry: 0.0,
            rz: 1.0,
            t: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }
}

/// Damped angular frequency `mu = sqrt(omega^2 - 4 kappa^2)`.
pub fn damped_frequency(params: &QubitParams) -> Result<f64> {
    let omega = params.omega();
    let two_kappa = 2.0 * params.kappa;
    if omega <= two_kappa {
        return Err(Error::OverdampedRegime { omega, two_kappa });
    }
    Ok(((omega - two_kappa) * (omega + two_kappa)).sqrt())
}

/// Closed-form Bloch vector at time `t` for the initial state `rz = 1`.
pub fn bloch_at(params: &QubitParams, t: f64) -> Result<BlochState> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let mu = damped_frequency(params)?;
    let omega = params.omega();
    let kappa = params.kappa;
    let decay = (-2.0 * kappa * t).exp();
    let (s, c) = (mu * t).sin_cos();
    Ok(BlochState {
        rx: 0.0,
        ry: -(omega / mu) * decay * s,
        rz: decay * (c + 2.0 * kappa * s / mu),
        t,
    })
}

/// `rz(t)` only; the quantity a `sigma_z` measurement samples.
pub fn rz_at(params: &QubitParams, t: f64) -> Result<f64> {
    if params.kappa == 0.0 {
        // Plain cosine: a fused sin/cos may round differently in the last bit.
        params.validate()?;
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        return Ok((params.omega() * t).cos());
    }
    bloch_at(params, t).map(|s| s.rz)
}

/// Probability of the `+1` outcome of a `sigma_z` measurement.
pub fn prob_plus(state: &BlochState) -> Result<f64> {
    if !state.rz.is_finite() || state.rz.abs() > 1.0 + 1e-9 {
        return Err(Error::InvalidBloch(state.rz));
    }
    Ok(((state.rz + 1.0) / 2.0).clamp(0.0, 1.0))
}

/// Largest step accepted by [`ode_evolve`]: `1 / (10 max(omega, 2 kappa))`.
pub fn max_ode_step(params: &QubitParams) -> f64 {
    1.0 / (10.0 * params.omega().max(2.0 * params.kappa))
}

/// Fixed-step classical RK4 integrator for the three Bloch equations.
#[derive(Debug, Clone)]
pub struct BlochIntegrator {
    omega: f64,
    kappa: f64,
    state: [f64; 3],
    t: f64,
}

impl BlochIntegrator {
    pub fn new(params: &QubitParams) -> Self {
        Self {
            omega: params.omega(),
            kappa: params.kappa,
            state: [0.0, 0.0, 1.0],
            t: 0.0,
        }
    }

    fn rhs(&self, r: &[f64; 3]) -> [f64; 3] {
        let damping = 4.0 * self.kappa;
        [-damping * r[0], -self.omega * r[2] - damping * r[1], self.omega * r[1]]
    }

    pub fn step(&mut self, h: f64) {
        let y = self.state;
        let k1 = self.rhs(&y);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = self.rhs(&y2);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = self.rhs(&y3);
        let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = self.rhs(&y4);
        for i in 0..3 {
            self.state[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.t += h;
    }

    /// Integrates up to `t_end` with steps no larger than `dt`, landing on
    /// `t_end` exactly.
    pub fn advance_to(&mut self, t_end: f64, dt: f64) {
        let span = t_end - self.t;
        if span <= 0.0 {
            return;
        }
        let n = (span / dt).ceil().max(1.0) as u64;
        let h = span / n as f64;
        for _ in 0..n {
            self.step(h);
        }
        self.t = t_end;
    }

    pub fn state(&self) -> BlochState {
        BlochState {
            rx: self.state[0],
            ry: self.state[1],
            rz: self.state[2],
            t: self.t,
        }
    }
}

/// Numerically integrated Bloch vector at `t_end` from the `rz = 1` state.
pub fn ode_evolve(params: &QubitParams, t_end: f64, dt: f64) -> Result<BlochState> {
    params.validate()?;
    if t_end < 0.0 {
        return Err(Error::NegativeTime(t_end));
    }
    let limit = max_ode_step(params);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let mut integrator = BlochIntegrator::new(params);
    integrator.advance_to(t_end, dt);
    Ok(integrator.state())
}
