//! Frequency-response identification: Blackman-Tukey spectral estimates from
//! chirp experiments, rational model fitting and lumped-parameter extraction.

mod bt;
mod extract;
mod fit;

pub use bt::{estimate_frf, hann_lag_window, BtOptions, SPECTRUM_FLOOR};
pub use extract::{extract_params, ExtractOptions, Extracted, SubFrfs};
pub use fit::{fit_tf, FitResult, FitSpec};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::control::ControllerConfig;
use crate::error::{Error, Result};
use crate::lti::{FrequencyGrid, RationalTf};
use crate::plant::{simulate, Excitation, PlantParams, SimOptions, SimTrace};
use crate::signal::{ChirpSpec, Signal};

/// Relative floor on the 1-sigma band used when turning it into fit weights,
/// so noiseless estimates give relative (not infinite) weights.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Complex response on a grid with a 1-sigma magnitude band.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub grid: FrequencyGrid,
    pub h: Vec<Complex64>,
    pub sigma: Vec<f64>,
    /// Squared coherence, 1 for exact responses.
    pub coherence: Vec<f64>,
    /// False where the estimate is undefined (input spectrum below floor).
    pub valid: Vec<bool>,
}

impl FrequencyResponse {
    pub fn new(
        grid: FrequencyGrid,
        h: Vec<Complex64>,
        sigma: Vec<f64>,
        coherence: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = grid.len();
        if h.len() != n || sigma.len() != n || coherence.len() != n || valid.len() != n {
            return Err(Error::InvalidGrid("response lengths differ from the grid".into()));
        }
        if sigma.iter().zip(&valid).any(|(s, v)| *v && !(*s >= 0.0)) {
            return Err(Error::InvalidGrid("sigma must be >= 0 at valid points".into()));
        }
        Ok(Self { grid, h, sigma, coherence, valid })
    }

    /// Exact response of `tf`; points on poles are marked invalid.
    pub fn from_tf(tf: &RationalTf, grid: &FrequencyGrid) -> Self {
        let n = grid.len();
        let mut h = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for &w in grid.omegas() {
            match tf.eval(w) {
                Ok(v) => {
                    h.push(v);
                    valid.push(true);
                }
                Err(_) => {
                    h.push(Complex64::new(f64::NAN, f64::NAN));
                    valid.push(false);
                }
            }
        }
        Self { grid: grid.clone(), h, sigma: vec![0.0; n], coherence: vec![1.0; n], valid }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }

    pub fn mag_db(&self, i: usize) -> f64 {
        20.0 * self.h[i].norm().log10()
    }

    pub fn phase_deg(&self, i: usize) -> f64 {
        self.h[i].arg().to_degrees()
    }

    /// Indices of valid points with `lo <= omega <= hi`.
    pub fn band(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.valid[i] && self.omegas()[i] >= lo && self.omegas()[i] <= hi)
            .collect()
    }

    /// Fit weight `1/sigma^2` with [`SIGMA_FLOOR`] relative to `|H|`.
    pub fn weight(&self, i: usize) -> f64 {
        let s = self.sigma[i].max(SIGMA_FLOOR * self.h[i].norm());
        1.0 / (s * s)
    }

    /// Rows `omega_rad_s, re, im, mag_db, phase_deg, sigma_mag`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 6]> + '_ {
        (0..self.len()).map(|i| {
            [self.omegas()[i], self.h[i].re, self.h[i].im, self.mag_db(i), self.phase_deg(i), self.sigma[i]]
        })
    }

    pub const HEADER: [&'static str; 6] = ["omega_rad_s", "re", "im", "mag_db", "phase_deg", "sigma_mag"];
}

/// Identification experiment defaults: a 0.3 Nm log chirp from 0.01 Hz to
/// 1 kHz over 600 s.
pub fn default_chirp() -> ChirpSpec {
    ChirpSpec { amplitude: 0.3, f0: 0.01, f1: 1000.0, duration: 600.0, allow_nyquist: true }
}

/// Spectral grid: 0.01 Hz to 1 kHz, 60 points per decade, in rad/s.
pub fn default_grid() -> FrequencyGrid {
    FrequencyGrid::per_decade(2.0 * PI * 0.01, 2.0 * PI * 1000.0, 60).expect("static grid")
}

/// Chirp on the endpoint of the uncontrolled plant.
pub fn chirp_experiment(params: &PlantParams, chirp: &ChirpSpec, dt: f64) -> Result<SimTrace> {
    chirp.validate()?;
    chirp.check_sampling(dt)?;
    let ex = Excitation::force(Signal::Chirp(*chirp));
    simulate(params, &ControllerConfig::None, &ex, &SimOptions::new(dt, chirp.duration))
}

/// The four responses identified from one chirp record.
#[derive(Debug, Clone)]
pub struct Identification {
    pub subs: SubFrfs,
    /// `X_e / F_e`.
    pub whole: FrequencyResponse,
    pub extracted: Extracted,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentifyOptions {
    pub bt: BtOptions,
    pub extract: ExtractOptions,
    pub fit: FitSpec,
}

/// Estimate `X/F_p`, `X_e/(F_e - F_p)`, `F_p/(X_e - X)` and `X_e/F_e` from a
/// trace, extract lumped parameters and fit the whole-system model.
pub fn identify(trace: &SimTrace, grid: &FrequencyGrid, opts: &IdentifyOptions) -> Result<Identification> {
    let dt = trace.dt;
    let net: Vec<f64> = trace.f_e.iter().zip(&trace.f_p).map(|(e, p)| e - p).collect();
    let stretch: Vec<f64> = trace.x_e.iter().zip(&trace.x).map(|(e, x)| e - x).collect();
    let motor = estimate_frf(&trace.f_p, &trace.x, dt, grid, &opts.bt)?;
    let endpoint = estimate_frf(&net, &trace.x_e, dt, grid, &opts.bt)?;
    let line = estimate_frf(&stretch, &trace.f_p, dt, grid, &opts.bt)?;
    let whole = estimate_frf(&trace.f_e, &trace.x_e, dt, grid, &opts.bt)?;
    let subs = SubFrfs { motor, endpoint, line };
    let extracted = extract_params(&subs, &opts.extract)?;
    let fit = fit_tf(&whole, &opts.fit)?;
    Ok(Identification { subs, whole, extracted, fit })
}
