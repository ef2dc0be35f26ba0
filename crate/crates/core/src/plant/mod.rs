//! Lumped 2-DOF series-elastic plant: motor inertia with linear friction, a
//! massless hydraulic line (spring + damper) and an endpoint inertia with
//! linear friction plus Dahl hysteresis.
//!
//! Sign conventions: `F_p = b_s (v_e - v) + k_s (x_e - x)` acts positively on
//! the motor and negatively on the endpoint.
//!
//! ```text
//! m   dv/dt   = F_a + F_p - b v - k x
//! m_e dv_e/dt = F_e - F_p - b_e v_e - k_e x_e - F_d
//! dF_d/dt     = dahl_rate(F_d, v_e)
//! ```
//!
//! The line damper is linear. The real hose shows nonlinear viscous losses that
//! a linear damper only approximates; that effect is not modelled.

mod dahl;
mod sim;
mod trace;

pub use dahl::{dahl_rate, DahlParams};
pub use sim::{simulate, EndpointDrive, Excitation, Sample, SimOptions, Stepper};
pub use trace::SimTrace;

use crate::error::{Error, Result};

/// Lumped parameters in motor-frame rotational units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Motor inertia, Nm/(rad/s^2).
    pub m: f64,
    /// Motor damping, Nm/(rad/s).
    pub b: f64,
    /// Motor stiffness, Nm/rad.
    pub k: f64,
    /// Endpoint inertia, Nm/(rad/s^2).
    pub m_e: f64,
    /// Endpoint damping, Nm/(rad/s).
    pub b_e: f64,
    /// Endpoint stiffness, Nm/rad.
    pub k_e: f64,
    /// Line damping, Nm/(rad/s).
    pub b_s: f64,
    /// Line stiffness, Nm/rad.
    pub k_s: f64,
    /// Dahl hysteresis amplitude, Nm. Zero disables hysteresis.
    pub f_c: f64,
    /// Dahl stiffness at `F_d = 0`, Nm/rad.
    pub sigma: f64,
    /// Dahl shape exponent.
    pub n_dahl: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::identified()
    }
}

impl PlantParams {
    /// Identified gripper parameters, with the quasi-static Dahl fit of the
    /// endpoint hysteresis (`F_c = 0.032 Nm`, `sigma = 12.8 Nm/rad`, `n = 1`).
    pub const fn identified() -> Self {
        Self {
            m: 1.1116e-3,
            b: 2.9814e-2,
            k: 0.1642,
            m_e: 0.7089e-3,
            b_e: 3.3879e-2,
            k_e: 0.0637,
            b_s: 9.2453e-3,
            k_s: 13.0782,
            f_c: 0.032,
            sigma: 12.8,
            n_dahl: 1.0,
        }
    }

    /// Same parameters with hysteresis disabled.
    pub fn linear(&self) -> Self {
        Self { f_c: 0.0, ..*self }
    }

    pub fn dahl(&self) -> DahlParams {
        DahlParams {
            f_c: self.f_c,
            sigma: self.sigma,
            n: self.n_dahl,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.f_c == 0.0 || self.sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("m", self.m), ("m_e", self.m_e), ("k_s", self.k_s), ("n_dahl", self.n_dahl)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be > 0 (got {v})")));
            }
        }
        let nonneg = [
            ("b", self.b),
            ("k", self.k),
            ("b_e", self.b_e),
            ("k_e", self.k_e),
            ("b_s", self.b_s),
            ("f_c", self.f_c),
            ("sigma", self.sigma),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be >= 0 (got {v})")));
            }
        }
        Ok(())
    }

    /// DC stiffness seen at the endpoint with the motor free:
    /// `k_e + k k_s / (k + k_s)`.
    pub fn passive_dc_stiffness(&self) -> f64 {
        self.k_e + self.k * self.k_s / (self.k + self.k_s)
    }
}

/// Continuous state of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Motor position, rad.
    pub x: f64,
    /// Motor velocity, rad/s.
    pub v: f64,
    /// Endpoint position, rad.
    pub x_e: f64,
    /// Endpoint velocity, rad/s.
    pub v_e: f64,
    /// Dahl friction state, Nm.
    pub f_d: f64,
}

impl PlantState {
    pub fn is_finite(&self) -> bool {
        [self.x, self.v, self.x_e, self.v_e, self.f_d]
            .iter()
            .all(|v| v.is_finite())
    }

    fn axpy(&self, h: f64, d: &PlantState) -> PlantState {
        PlantState {
            x: self.x + h * d.x,
            v: self.v + h * d.v,
            x_e: self.x_e + h * d.x_e,
            v_e: self.v_e + h * d.v_e,
            f_d: self.f_d + h * d.f_d,
        }
    }
}

/// Transmission force `F_p = b_s (v_e - v) + k_s (x_e - x)`.
pub fn internal_force(state: &PlantState, params: &PlantParams) -> f64 {
    params.b_s * (state.v_e - state.v) + params.k_s * (state.x_e - state.x)
}

fn derivatives(s: &PlantState, p: &PlantParams, f_a: f64, f_e: f64) -> PlantState {
    let f_p = internal_force(s, p);
    PlantState {
        x: s.v,
        v: (f_a + f_p - p.b * s.v - p.k * s.x) / p.m,
        x_e: s.v_e,
        v_e: (f_e - f_p - p.b_e * s.v_e - p.k_e * s.x_e - s.f_d) / p.m_e,
        f_d: dahl_rate(s.f_d, s.v_e, p),
    }
}

/// RK4 with `F_a` held and `F_e` sampled at the start, middle and end of the step.
pub(crate) fn rk4(state: &PlantState, p: &PlantParams, f_a: f64, f_e: [f64; 3], dt: f64) -> PlantState {
    let k1 = derivatives(state, p, f_a, f_e[0]);
    let k2 = derivatives(&state.axpy(dt / 2.0, &k1), p, f_a, f_e[1]);
    let k3 = derivatives(&state.axpy(dt / 2.0, &k2), p, f_a, f_e[1]);
    let k4 = derivatives(&state.axpy(dt, &k3), p, f_a, f_e[2]);
    let mut next = *state;
    next.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    next.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    next.x_e += dt / 6.0 * (k1.x_e + 2.0 * k2.x_e + 2.0 * k3.x_e + k4.x_e);
    next.v_e += dt / 6.0 * (k1.v_e + 2.0 * k2.v_e + 2.0 * k3.v_e + k4.v_e);
    next.f_d += dt / 6.0 * (k1.f_d + 2.0 * k2.f_d + 2.0 * k3.f_d + k4.f_d);
    next.f_d = p.dahl().clamp(next.f_d);
    next
}

/// Maximum integration step accepted by [`step`].
pub const MAX_DT: f64 = 1e-2;

/// One classical RK4 step with `F_a` and `F_e` held constant over the step.
/// The Dahl state is clamped to `[-F_c, F_c]` afterwards.
pub fn step(state: &PlantState, params: &PlantParams, f_a: f64, f_e: f64, dt: f64) -> Result<PlantState> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::param("dt", format!("must lie in (0, {MAX_DT}] s (got {dt})")));
    }
    let next = rk4(state, params, f_a, [f_e; 3], dt);
    if !next.is_finite() {
        return Err(Error::Diverged { step: 0, time: dt });
    }
    Ok(next)
}

/// Prescribed endpoint kinematics for backdrive experiments.
pub(crate) trait Kinematics {
    /// `(x_e, v_e, a_e)` at time `t`.
    fn at(&self, t: f64) -> (f64, f64, f64);
}

/// Advance the motor and Dahl states with the endpoint following `kin`.
/// Returns the new state with `x_e, v_e` set to the prescribed values at `t + dt`.
pub(crate) fn step_backdriven(
    state: &PlantState,
    p: &PlantParams,
    f_a: f64,
    kin: &dyn Kinematics,
    t: f64,
    dt: f64,
) -> PlantState {
    let deriv = |s: &PlantState, tt: f64| {
        let (x_e, v_e, _) = kin.at(tt);
        let s = PlantState { x_e, v_e, ..*s };
        let f_p = internal_force(&s, p);
        PlantState {
            x: s.v,
            v: (f_a + f_p - p.b * s.v - p.k * s.x) / p.m,
            x_e: 0.0,
            v_e: 0.0,
            f_d: dahl_rate(s.f_d, v_e, p),
        }
    };
    let k1 = deriv(state, t);
    let k2 = deriv(&state.axpy(dt / 2.0, &k1), t + dt / 2.0);
    let k3 = deriv(&state.axpy(dt / 2.0, &k2), t + dt / 2.0);
    let k4 = deriv(&state.axpy(dt, &k3), t + dt);
    let mut next = *state;
    next.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    next.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    next.f_d += dt / 6.0 * (k1.f_d + 2.0 * k2.f_d + 2.0 * k3.f_d + k4.f_d);
    next.f_d = p.dahl().clamp(next.f_d);
    let (x_e, v_e, _) = kin.at(t + dt);
    next.x_e = x_e;
    next.v_e = v_e;
    next
}

/// Endpoint force needed to impose the prescribed motion.
pub(crate) fn backdrive_force(state: &PlantState, p: &PlantParams, a_e: f64) -> f64 {
    p.m_e * a_e + p.b_e * state.v_e + p.k_e * state.x_e + state.f_d + internal_force(state, p)
}

/// Single-inertia plant `m x'' + b x' + k x = F`, integrated with the same RK4
/// scheme. Used to check force-feedback scaling on a collocated 1-DOF system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDof {
    pub m: f64,
    pub b: f64,
    pub k: f64,
}

impl OneDof {
    /// Advance `(x, v)` by `dt` under constant force.
    pub fn step(&self, x: f64, v: f64, force: f64, dt: f64) -> (f64, f64) {
        let acc = |x: f64, v: f64| (force - self.b * v - self.k * x) / self.m;
        let (k1x, k1v) = (v, acc(x, v));
        let (k2x, k2v) = (v + dt / 2.0 * k1v, acc(x + dt / 2.0 * k1x, v + dt / 2.0 * k1v));
        let (k3x, k3v) = (v + dt / 2.0 * k2v, acc(x + dt / 2.0 * k2x, v + dt / 2.0 * k2v));
        let (k4x, k4v) = (v + dt * k3v, acc(x + dt * k3x, v + dt * k3v));
        (
            x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }
}
