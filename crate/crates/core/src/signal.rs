//! Excitation signals.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `amplitude * sin(omega t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub fn new(amplitude: f64, omega: f64) -> Self {
        Self { amplitude, omega, phase: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    /// Value, first and second derivative.
    pub fn kinematics(&self, t: f64) -> (f64, f64, f64) {
        let (s, c) = (self.omega * t + self.phase).sin_cos();
        let a = self.amplitude;
        let w = self.omega;
        (a * s, a * w * c, -a * w * w * s)
    }
}

/// Logarithmic sine sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpSpec {
    /// Nm
    pub amplitude: f64,
    /// Start frequency, Hz.
    pub f0: f64,
    /// End frequency, Hz.
    pub f1: f64,
    /// s
    pub duration: f64,
    /// Permit `f1` up to and beyond the Nyquist frequency of the sampling step.
    pub allow_nyquist: bool,
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0 && self.f1 > self.f0) {
            return Err(Error::Signal(format!(
                "chirp needs 0 < f0 < f1 (got f0 = {}, f1 = {})",
                self.f0, self.f1
            )));
        }
        if !(self.duration > 0.0) {
            return Err(Error::Signal(format!(
                "chirp duration must be positive (got {})",
                self.duration
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Signal("chirp amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Check the sweep against the sampling step.
    pub fn check_sampling(&self, dt: f64) -> Result<()> {
        let nyquist = 0.5 / dt;
        if self.f1 >= nyquist && !self.allow_nyquist {
            return Err(Error::Signal(format!(
                "chirp end frequency {} Hz reaches the Nyquist limit {} Hz; set allow_nyquist to override",
                self.f1, nyquist
            )));
        }
        if self.f1 > 0.4 / dt {
            log::warn!(
                "chirp end frequency {} Hz exceeds 0.4/dt = {} Hz; the top of the sweep is poorly sampled",
                self.f1,
                0.4 / dt
            );
        }
        Ok(())
    }

    /// Instantaneous frequency in Hz.
    pub fn frequency_at(&self, t: f64) -> f64 {
        self.f0 * (self.f1 / self.f0).powf(t / self.duration)
    }

    pub fn phase_at(&self, t: f64) -> f64 {
        let r = (self.f1 / self.f0).ln();
        2.0 * PI * self.f0 * self.duration / r * ((r * t / self.duration).exp() - 1.0)
    }

    /// Zero outside `[0, duration]`.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            0.0
        } else {
            self.amplitude * self.phase_at(t).sin()
        }
    }
}

/// Sample a chirp at step `dt`, `round(duration / dt) + 1` points.
pub fn chirp(spec: &ChirpSpec, dt: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    spec.check_sampling(dt)?;
    let n = (spec.duration / dt).round() as usize + 1;
    Ok((0..n).map(|i| spec.value(i as f64 * dt)).collect())
}

/// Scalar time signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Signal {
    #[default]
    Zero,
    Constant(f64),
    Sine(Sinusoid),
    Chirp(ChirpSpec),
    /// Samples at a fixed step, held between samples and zero past the end.
    Sampled { dt: f64, values: Arc<Vec<f64>> },
}

impl Signal {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(c) => *c,
            Signal::Sine(s) => s.value(t),
            Signal::Chirp(c) => c.value(t),
            Signal::Sampled { dt, values } => {
                let i = (t / dt + 1e-9).floor();
                if i < 0.0 {
                    0.0
                } else {
                    values.get(i as usize).copied().unwrap_or(0.0)
                }
            }
        }
    }

    /// Values at `t`, `t + dt/2` and `t + dt`, the RK4 stage times. Sampled
    /// signals are held over the step.
    pub fn stage_values(&self, t: f64, dt: f64) -> [f64; 3] {
        match self {
            Signal::Sampled { .. } => [self.value(t); 3],
            _ => [self.value(t), self.value(t + dt / 2.0), self.value(t + dt)],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Signal::Zero => true,
            Signal::Constant(c) => *c == 0.0,
            Signal::Sine(s) => s.amplitude == 0.0,
            Signal::Chirp(c) => c.amplitude == 0.0,
            Signal::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// The same signal multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Signal {
        match self {
            Signal::Zero => Signal::Zero,
            Signal::Constant(c) => Signal::Constant(c * k),
            Signal::Sine(s) => Signal::Sine(Sinusoid { amplitude: s.amplitude * k, ..*s }),
            Signal::Chirp(c) => Signal::Chirp(ChirpSpec { amplitude: c.amplitude * k, ..*c }),
            Signal::Sampled { dt, values } => Signal::Sampled {
                dt: *dt,
                values: Arc::new(values.iter().map(|v| v * k).collect()),
            },
        }
    }

    pub(crate) fn validate(&self, dt: f64) -> Result<()> {
        match self {
            Signal::Chirp(c) => {
                c.validate()?;
                c.check_sampling(dt)
            }
            Signal::Sampled { dt: sdt, .. } if !(*sdt > 0.0) => {
                Err(Error::Signal("sampled signal needs a positive step".into()))
            }
            _ => Ok(()),
        }
    }
}
