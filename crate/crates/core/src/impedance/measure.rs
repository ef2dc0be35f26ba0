//! Sinusoidal steady-state impedance measurement.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::control::ControllerConfig;
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::lti::{FrequencyGrid, DEFAULT_DT};
use crate::plant::{Excitation, PlantParams, SimOptions, Stepper};
use crate::signal::{Signal, Sinusoid};
use crate::sysid::FrequencyResponse;

/// Which force/velocity pair defines the impedance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Port {
    /// `F_e / V_e`.
    #[default]
    Endpoint,
    /// `F_p / V`, the transmission force against motor velocity.
    Motor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceOptions {
    pub dt: f64,
    /// Endpoint force amplitude, Nm.
    pub amplitude: f64,
    /// Cycles discarded before steady state is tested.
    pub settle_cycles: usize,
    /// Relative change of the cycle estimate accepted as steady state.
    pub drift_tol: f64,
    /// Give up waiting for steady state after this many cycles.
    pub max_cycles: usize,
    pub computation_delay: usize,
    pub port: Port,
    pub exec: Execution,
}

impl Default for ImpedanceOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            amplitude: 0.1,
            settle_cycles: 5,
            drift_tol: 5e-3,
            max_cycles: 60,
            computation_delay: 0,
            port: Port::Endpoint,
            exec: Execution::Auto,
        }
    }
}

/// Nearest frequency whose period is a whole number of samples (at least 4).
pub fn commensurate(omega: f64, dt: f64) -> f64 {
    let n = (2.0 * PI / (omega * dt)).round().max(4.0);
    2.0 * PI / (n * dt)
}

/// Outcome at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResult {
    pub omega: f64,
    /// `None` when the simulation diverged.
    pub z: Option<Complex64>,
    /// Relative change between the last two cycle estimates.
    pub drift: f64,
    pub cycles: usize,
}

/// Drive the endpoint with `A sin(omega t)` and extract the fundamental of
/// force and velocity by single-bin correlation over each whole cycle.
pub fn measure_point(
    params: &PlantParams,
    controller: &ControllerConfig,
    omega: f64,
    opts: &ImpedanceOptions,
) -> Result<PointResult> {
    let dt = opts.dt;
    let omega = commensurate(omega, dt);
    let n = (2.0 * PI / (omega * dt)).round() as usize;
    let ex = Excitation::force(Signal::Sine(Sinusoid::new(opts.amplitude, omega)));
    // the stepper runs open-ended, duration is not used
    let sim = SimOptions { dt, duration: 0.0, computation_delay: opts.computation_delay, ..Default::default() };
    let mut stepper = Stepper::new(params, controller, &ex, &sim)?;
    let step = Complex64::from_polar(1.0, -omega * dt);
    let mut prev: Option<Complex64> = None;
    let mut drift = f64::INFINITY;
    for cycle in 1..=opts.max_cycles.max(opts.settle_cycles + 1) {
        let (mut pf, mut pv) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        // phase restarts every cycle since the period is whole samples
        let mut z = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            let s = match stepper.advance() {
                Ok(s) => s,
                Err(e) if e.is_numerical() => {
                    log::warn!("impedance point at {omega} rad/s diverged: {e}");
                    return Ok(PointResult { omega, z: None, drift: f64::NAN, cycles: cycle });
                }
                Err(e) => return Err(e),
            };
            let (f, v) = match opts.port {
                Port::Endpoint => (s.f_e, s.state.v_e),
                Port::Motor => (s.f_p, s.state.v),
            };
            pf += f * z;
            pv += v * z;
            z *= step;
        }
        let zc = pf / pv;
        if let Some(p) = prev {
            drift = (zc - p).norm() / zc.norm();
        }
        prev = Some(zc);
        if cycle > opts.settle_cycles && drift < opts.drift_tol {
            return Ok(PointResult { omega, z: Some(zc), drift, cycles: cycle });
        }
    }
    log::warn!("impedance at {omega} rad/s did not settle (drift {drift:.2e})");
    Ok(PointResult { omega, z: prev, drift, cycles: opts.max_cycles })
}

/// Measured impedance on `grid`. Each grid frequency is moved to the nearest
/// one with a whole-sample period; the returned grid holds the frequencies
/// actually used. Diverged points are marked invalid. Points run in parallel
/// and are collected in grid order.
pub fn measure_impedance(
    params: &PlantParams,
    controller: &ControllerConfig,
    grid: &FrequencyGrid,
    opts: &ImpedanceOptions,
) -> Result<FrequencyResponse> {
    let results = exec::map(opts.exec, grid.omegas(), |&w| measure_point(params, controller, w, opts));
    let results: Vec<PointResult> = results.into_iter().collect::<Result<_>>()?;
    let omegas = FrequencyGrid::new(results.iter().map(|r| r.omega).collect())?;
    let h = results.iter().map(|r| r.z.unwrap_or(Complex64::new(f64::NAN, f64::NAN))).collect();
    let valid: Vec<bool> = results.iter().map(|r| r.z.is_some_and(|z| z.norm().is_finite())).collect();
    let sigma = results
        .iter()
        .zip(&valid)
        .map(|(r, ok)| if *ok { r.drift * r.z.unwrap().norm() } else { f64::NAN })
        .collect();
    let coherence = valid.iter().map(|ok| if *ok { 1.0 } else { 0.0 }).collect();
    FrequencyResponse::new(omegas, h, sigma, coherence, valid)
}
