//! Discrete-time control laws: proportional force feedback, the disturbance
//! observer (DOB), a PD position hold, and model-based endpoint friction
//! feedforward.
//!
//! Every s-domain block is realized with the Tustin map at the loop period.
//! The DOB is implemented in its integrator form
//!
//! ```text
//! F_a = F_ref - lambda m_n v + lambda * integral(F_ref + F_p - b_n v - k_n x) dt
//! ```
//!
//! which is the input-output map of
//! `F_a = F_ref/(1-Q) + Q/(1-Q) F_p - Q/(1-Q) P_n^-1 v` with `Q = lambda/(s+lambda)`
//! and `P_n^-1 = m_n s + b_n + k_n/s`. The measured terms of the integral use
//! the trapezoid rule. `F_ref` is summed with the rectangle rule instead: the
//! command is held over each period, and matching that hold is what makes
//! `F_a - F_ref` decay exactly when the nominal model equals the plant.

use crate::error::{Error, Result};
use crate::lti::{discretize_tustin, DiscreteFilter, RationalTf};
use crate::plant::{DahlParams, PlantParams};

/// Which force a proportional feedback loop measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceSource {
    /// Transmission (fluid pressure) force `F_p`.
    Internal,
    /// Endpoint contact force `F_e`.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobConfig {
    /// Q-filter cutoff, rad/s.
    pub lambda: f64,
    /// Nominal inertia, Nm/(rad/s^2).
    pub m_n: f64,
    /// Nominal damping, Nm/(rad/s).
    pub b_n: f64,
    /// Nominal stiffness, Nm/rad.
    pub k_n: f64,
}

/// Default Q-filter cutoff in rad/s.
pub const DEFAULT_LAMBDA: f64 = 20.0;

impl DobConfig {
    /// Frictionless nominal plant `P_n = 1/(m s)` targeting a pure inertia.
    pub fn frictionless(params: &PlantParams, lambda: f64) -> Self {
        Self { lambda, m_n: params.m, b_n: 0.0, k_n: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be > 0 (got {})", self.lambda)));
        }
        for (name, v) in [("m_n", self.m_n), ("b_n", self.b_n), ("k_n", self.k_n)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdConfig {
    /// Nm/rad
    pub k_p: f64,
    /// Nm/(rad/s)
    pub k_d: f64,
    /// rad
    pub x_target: f64,
}

impl PdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_p >= 0.0) || !self.k_p.is_finite() {
            return Err(Error::param("k_p", "must be >= 0"));
        }
        if !(self.k_d >= 0.0) || !self.k_d.is_finite() {
            return Err(Error::param("k_d", "must be >= 0"));
        }
        if !self.x_target.is_finite() {
            return Err(Error::param("x_target", "must be finite"));
        }
        Ok(())
    }
}

/// Estimated Dahl parameters used by the feedforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DahlEstimate {
    pub f_c: f64,
    pub sigma: f64,
}

/// Model of the endpoint friction and hydraulic line used for feedforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedforwardConfig {
    pub b_e: f64,
    pub k_e: f64,
    pub b_s: f64,
    pub k_s: f64,
    pub dahl: Option<DahlEstimate>,
}

impl FeedforwardConfig {
    /// Hat-parameters equal to the given plant; `with_dahl` adds the hysteresis term.
    pub fn from_params(params: &PlantParams, with_dahl: bool) -> Self {
        Self {
            b_e: params.b_e,
            k_e: params.k_e,
            b_s: params.b_s,
            k_s: params.k_s,
            dahl: with_dahl.then_some(DahlEstimate { f_c: params.f_c, sigma: params.sigma }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_s > 0.0) || !self.k_s.is_finite() {
            return Err(Error::param(
                "k_s_hat",
                "must be > 0; the endpoint velocity estimator is undefined otherwise",
            ));
        }
        for (name, v) in [("b_e_hat", self.b_e), ("k_e_hat", self.k_e), ("b_s_hat", self.b_s)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        if let Some(d) = self.dahl {
            if !(d.f_c >= 0.0) || !(d.sigma >= 0.0) {
                return Err(Error::param("dahl_hat", "F_c and sigma must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ControllerConfig {
    /// Motor off, `F_a = 0`.
    #[default]
    None,
    ProportionalFf { gain: f64, source: ForceSource },
    Dob(DobConfig),
    Pd(PdConfig),
    /// DOB with the feedforward compensation fed into its force reference.
    Composite { dob: DobConfig, feedforward: FeedforwardConfig },
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ControllerConfig::None => Ok(()),
            ControllerConfig::ProportionalFf { gain, .. } => {
                if gain.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("k_f", "must be finite"))
                }
            }
            ControllerConfig::Dob(d) => d.validate(),
            ControllerConfig::Pd(p) => p.validate(),
            ControllerConfig::Composite { dob, feedforward } => {
                dob.validate()?;
                feedforward.validate()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControllerConfig::None => "none",
            ControllerConfig::ProportionalFf { .. } => "proportional",
            ControllerConfig::Dob(_) => "dob",
            ControllerConfig::Pd(_) => "pd",
            ControllerConfig::Composite { .. } => "composite",
        }
    }
}

/// Sensor values available to the controller at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurement {
    pub f_p: f64,
    pub f_e: f64,
    pub x: f64,
    pub v: f64,
    pub f_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub f_a: f64,
    /// Feedforward compensation force, zero when no feedforward runs.
    pub f_cmp: f64,
    /// Endpoint velocity estimate, `None` when no feedforward runs.
    pub v_e_hat: Option<f64>,
}

/// `F_a = K_f F_meas`.
pub fn proportional_ff(gain: f64, f_meas: f64) -> f64 {
    gain * f_meas
}

/// `F_a = K_p (x_target - x) - K_d v`.
pub fn pd_command(cfg: &PdConfig, x: f64, v: f64) -> f64 {
    cfg.k_p * (cfg.x_target - x) - cfg.k_d * v
}

/// Trapezoidal integrator, the Tustin realization of `1/s`.
#[derive(Debug, Clone, Default)]
struct Trapezoid {
    acc: f64,
    prev: f64,
}

impl Trapezoid {
    fn step(&mut self, u: f64, dt: f64) -> f64 {
        self.acc += 0.5 * dt * (u + self.prev);
        self.prev = u;
        self.acc
    }
}

/// Disturbance observer state.
#[derive(Debug, Clone)]
pub struct Dob {
    cfg: DobConfig,
    dt: f64,
    integral: Trapezoid,
    /// Reference already applied, `dt * sum F_ref` over past samples.
    applied: f64,
}

impl Dob {
    pub fn new(cfg: DobConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, dt, integral: Trapezoid::default(), applied: 0.0 })
    }

    pub fn config(&self) -> &DobConfig {
        &self.cfg
    }

    pub fn reset(&mut self) {
        self.integral = Trapezoid::default();
        self.applied = 0.0;
    }

    /// One control period. `x` is only used by the nominal stiffness term.
    pub fn command(&mut self, f_ref: f64, f_p: f64, v: f64, x: f64) -> Result<f64> {
        if ![f_ref, f_p, v, x].iter().all(|u| u.is_finite()) {
            return Err(Error::NonFiniteInput { step: 0 });
        }
        let c = &self.cfg;
        // measured terms use the trapezoid rule; the reference is held over
        // each period like the command it produces, so it is summed as a step
        let i = self.integral.step(f_p - c.b_n * v - c.k_n * x, self.dt) + self.applied;
        self.applied += self.dt * f_ref;
        Ok(f_ref - c.lambda * c.m_n * v + c.lambda * i)
    }
}

/// Output of one feedforward update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedforwardOutput {
    pub f_cmp: f64,
    pub v_e_hat: f64,
    pub f_d_hat: f64,
}

/// Endpoint friction feedforward. The endpoint velocity is reconstructed from
/// the motor velocity and transmission force through the line model,
/// `v_e_hat = v + s/(b_s s + k_s) F_p`, and the compensation is
/// `F_cmp = (b_e + k_e/s) v_e_hat + F_d_hat`.
#[derive(Debug, Clone)]
pub struct Feedforward {
    cfg: FeedforwardConfig,
    dt: f64,
    line: LineDerivative,
    position: Trapezoid,
    dahl: Option<DahlParams>,
    f_d_hat: f64,
    prev_v_e_hat: f64,
}

#[derive(Debug, Clone)]
enum LineDerivative {
    Filter(DiscreteFilter),
    /// Rigid-damper-free line: backward difference of `F_p / k_s`.
    Difference { k_s: f64, prev: f64 },
}

impl Feedforward {
    pub fn new(cfg: FeedforwardConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let line = if cfg.b_s > 0.0 {
            let g = RationalTf::from_coeffs(&[1.0, 0.0], &[cfg.b_s, cfg.k_s])?;
            LineDerivative::Filter(discretize_tustin(&g, dt)?.filter())
        } else {
            LineDerivative::Difference { k_s: cfg.k_s, prev: 0.0 }
        };
        let dahl = cfg
            .dahl
            .map(|d| DahlParams { f_c: d.f_c, sigma: d.sigma, n: 1.0 });
        Ok(Self {
            cfg,
            dt,
            line,
            position: Trapezoid::default(),
            dahl,
            f_d_hat: 0.0,
            prev_v_e_hat: 0.0,
        })
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.cfg, self.dt).expect("config validated at construction");
    }

    pub fn update(&mut self, f_p: f64, v: f64) -> Result<FeedforwardOutput> {
        if !f_p.is_finite() || !v.is_finite() {
            return Err(Error::NonFiniteInput { step: 0 });
        }
        let relative = match &mut self.line {
            LineDerivative::Filter(f) => f.step(f_p),
            LineDerivative::Difference { k_s, prev } => {
                let d = (f_p - *prev) / (*k_s * self.dt);
                *prev = f_p;
                d
            }
        };
        let v_e_hat = v + relative;
        let x_e_hat = self.position.step(v_e_hat, self.dt);
        if let Some(d) = &self.dahl {
            let dx = 0.5 * self.dt * (v_e_hat + self.prev_v_e_hat);
            self.f_d_hat = d.advance(self.f_d_hat, dx);
        }
        self.prev_v_e_hat = v_e_hat;
        let f_cmp = self.cfg.b_e * v_e_hat + self.cfg.k_e * x_e_hat + self.f_d_hat;
        Ok(FeedforwardOutput { f_cmp, v_e_hat, f_d_hat: self.f_d_hat })
    }
}

/// Combine a DOB with a feedforward output. The compensation enters as a shift
/// of the DOB force reference, so at low frequency the transmission force
/// settles at `F_p = -(F_ref + F_cmp)`, cancelling the modelled endpoint friction.
pub fn compose(dob: &mut Dob, ff: &FeedforwardOutput, f_ref: f64, f_p: f64, v: f64, x: f64) -> Result<f64> {
    dob.command(f_ref + ff.f_cmp, f_p, v, x)
}

#[derive(Debug, Clone)]
enum Runtime {
    None,
    Proportional { gain: f64, source: ForceSource },
    Dob(Dob),
    Pd(PdConfig),
    Composite { dob: Dob, ff: Box<Feedforward> },
}

/// A configured controller with its discrete state. One instance serves one
/// simulation loop.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    dt: f64,
    runtime: Runtime,
}

impl Controller {
    pub fn new(config: ControllerConfig, dt: f64) -> Result<Self> {
        config.validate()?;
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        let runtime = match config {
            ControllerConfig::None => Runtime::None,
            ControllerConfig::ProportionalFf { gain, source } => Runtime::Proportional { gain, source },
            ControllerConfig::Dob(d) => Runtime::Dob(Dob::new(d, dt)?),
            ControllerConfig::Pd(p) => Runtime::Pd(p),
            ControllerConfig::Composite { dob, feedforward } => Runtime::Composite {
                dob: Dob::new(dob, dt)?,
                ff: Box::new(Feedforward::new(feedforward, dt)?),
            },
        };
        Ok(Self { config, dt, runtime })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.config, self.dt).expect("config validated at construction");
    }

    pub fn update(&mut self, m: &Measurement) -> Result<ControlOutput> {
        let all = [m.f_p, m.f_e, m.x, m.v, m.f_ref];
        if !all.iter().all(|u| u.is_finite()) {
            return Err(Error::NonFiniteInput { step: 0 });
        }
        Ok(match &mut self.runtime {
            Runtime::None => ControlOutput::default(),
            Runtime::Proportional { gain, source } => {
                let f = match source {
                    ForceSource::Internal => m.f_p,
                    ForceSource::External => m.f_e,
                };
                ControlOutput { f_a: m.f_ref + proportional_ff(*gain, f), ..Default::default() }
            }
            Runtime::Dob(d) => ControlOutput {
                f_a: d.command(m.f_ref, m.f_p, m.v, m.x)?,
                ..Default::default()
            },
            Runtime::Pd(p) => ControlOutput { f_a: pd_command(p, m.x, m.v), ..Default::default() },
            Runtime::Composite { dob, ff } => {
                let out = ff.update(m.f_p, m.v)?;
                ControlOutput {
                    f_a: compose(dob, &out, m.f_ref, m.f_p, m.v, m.x)?,
                    f_cmp: out.f_cmp,
                    v_e_hat: Some(out.v_e_hat),
                }
            }
        })
    }
}
