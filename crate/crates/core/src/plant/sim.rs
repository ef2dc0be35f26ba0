use std::collections::VecDeque;

use super::{backdrive_force, internal_force, rk4, step_backdriven, Kinematics, PlantParams, PlantState, SimTrace};
use crate::control::{Controller, ControllerConfig, Measurement};
use crate::error::{Error, Result};
use crate::lti::DEFAULT_DT;
use crate::signal::{Signal, Sinusoid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integration and control period, s.
    pub dt: f64,
    /// Simulated time, s.
    pub duration: f64,
    /// Whole samples between a measurement and the command it produces.
    pub computation_delay: usize,
    /// Symmetric actuator saturation, Nm.
    pub torque_limit: Option<f64>,
    pub initial: PlantState,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            duration: 1.0,
            computation_delay: 0,
            torque_limit: None,
            initial: PlantState::default(),
        }
    }
}

impl SimOptions {
    pub fn new(dt: f64, duration: f64) -> Self {
        Self { dt, duration, ..Default::default() }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= super::MAX_DT) {
            return Err(Error::param("dt", format!("must lie in (0, {}] s", super::MAX_DT)));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::param("duration", "must be >= 0"));
        }
        if let Some(l) = self.torque_limit {
            if !(l > 0.0) {
                return Err(Error::param("torque_limit", "must be > 0"));
            }
        }
        if !self.initial.is_finite() {
            return Err(Error::param("initial", "state must be finite"));
        }
        Ok(())
    }
}

/// How the endpoint is excited.
#[derive(Debug, Clone, PartialEq)]
pub enum EndpointDrive {
    /// Applied endpoint force `F_e(t)`.
    Force(Signal),
    /// Endpoint position imposed as `x_e(t)`; `F_e` is the force this takes.
    Position(Sinusoid),
}

impl Default for EndpointDrive {
    fn default() -> Self {
        EndpointDrive::Force(Signal::Zero)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Excitation {
    pub endpoint: EndpointDrive,
    /// Force reference `F_ref(t)` handed to the controller.
    pub reference: Signal,
}

impl Excitation {
    pub fn force(f_e: Signal) -> Self {
        Self { endpoint: EndpointDrive::Force(f_e), reference: Signal::Zero }
    }

    pub fn position(x_e: Sinusoid) -> Self {
        Self { endpoint: EndpointDrive::Position(x_e), reference: Signal::Zero }
    }
}

impl Kinematics for Sinusoid {
    fn at(&self, t: f64) -> (f64, f64, f64) {
        self.kinematics(t)
    }
}

/// One logged sample of a running simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub t: f64,
    pub state: PlantState,
    pub f_p: f64,
    pub f_e: f64,
    pub f_a: f64,
    pub f_cmp: f64,
    pub f_ref: f64,
}

impl Sample {
    fn row(&self) -> [f64; 11] {
        let s = &self.state;
        [self.t, s.x, s.v, s.x_e, s.v_e, self.f_p, self.f_e, self.f_a, s.f_d, self.f_cmp, self.f_ref]
    }
}

/// Closed-loop simulation advanced one control period at a time.
///
/// At every sample the controller sees the current measurements, its command
/// passes through the computation delay and saturation, and the plant is
/// advanced one RK4 step with `F_a` held. Analytic endpoint forces are
/// evaluated at the RK4 stage times; sampled ones are held.
pub struct Stepper<'a> {
    params: &'a PlantParams,
    excitation: &'a Excitation,
    opts: SimOptions,
    ctrl: Controller,
    pending: VecDeque<f64>,
    state: PlantState,
    k: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(
        params: &'a PlantParams,
        controller: &ControllerConfig,
        excitation: &'a Excitation,
        opts: &SimOptions,
    ) -> Result<Self> {
        params.validate()?;
        opts.validate()?;
        excitation.reference.validate(opts.dt)?;
        if let EndpointDrive::Force(s) = &excitation.endpoint {
            s.validate(opts.dt)?;
        }
        let mut state = opts.initial;
        if let EndpointDrive::Position(kin) = &excitation.endpoint {
            let (x_e, v_e, _) = kin.at(0.0);
            state.x_e = x_e;
            state.v_e = v_e;
        }
        Ok(Self {
            params,
            excitation,
            opts: *opts,
            ctrl: Controller::new(*controller, opts.dt)?,
            pending: std::iter::repeat_n(0.0, opts.computation_delay).collect(),
            state,
            k: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    /// Samples taken so far.
    pub fn index(&self) -> usize {
        self.k
    }

    /// Measure and command at the current sample, then advance the plant.
    /// Returns the sample as seen before the step.
    pub fn advance(&mut self) -> Result<Sample> {
        let sample = self.measure()?;
        self.integrate(sample.f_a, sample.t)?;
        Ok(sample)
    }

    /// Measure and command without advancing (used for the final row).
    fn measure(&mut self) -> Result<Sample> {
        let (p, dt, k) = (self.params, self.opts.dt, self.k);
        let t = k as f64 * dt;
        let state = self.state;
        let f_p = internal_force(&state, p);
        let f_e = match &self.excitation.endpoint {
            EndpointDrive::Force(s) => s.value(t),
            EndpointDrive::Position(kin) => backdrive_force(&state, p, kin.at(t).2),
        };
        let f_ref = self.excitation.reference.value(t);
        let meas = Measurement { f_p, f_e, x: state.x, v: state.v, f_ref };
        let out = self.ctrl.update(&meas).map_err(|e| match e {
            Error::NonFiniteInput { .. } => Error::Diverged { step: k, time: t },
            other => other,
        })?;
        self.pending.push_back(out.f_a);
        let mut f_a = self.pending.pop_front().unwrap_or(0.0);
        if let Some(l) = self.opts.torque_limit {
            f_a = f_a.clamp(-l, l);
        }
        Ok(Sample { t, state, f_p, f_e, f_a, f_cmp: out.f_cmp, f_ref })
    }

    fn integrate(&mut self, f_a: f64, t: f64) -> Result<()> {
        let (p, dt) = (self.params, self.opts.dt);
        let next = match &self.excitation.endpoint {
            EndpointDrive::Force(s) => rk4(&self.state, p, f_a, s.stage_values(t, dt), dt),
            EndpointDrive::Position(kin) => step_backdriven(&self.state, p, f_a, kin, t, dt),
        };
        self.k += 1;
        if !next.is_finite() {
            return Err(Error::Diverged { step: self.k, time: self.k as f64 * dt });
        }
        self.state = next;
        Ok(())
    }
}

/// Run the plant under `controller` for `opts.duration` seconds; see
/// [`Stepper`] for the per-sample sequence. The trace holds `steps + 1` rows,
/// the last one taken after the final step.
pub fn simulate(
    params: &PlantParams,
    controller: &ControllerConfig,
    excitation: &Excitation,
    opts: &SimOptions,
) -> Result<SimTrace> {
    let mut stepper = Stepper::new(params, controller, excitation, opts)?;
    let n = opts.steps();
    let mut trace = SimTrace::with_capacity(opts.dt, n + 1);
    for _ in 0..n {
        trace.push(stepper.advance()?.row());
    }
    trace.push(stepper.measure()?.row());
    Ok(trace)
}
