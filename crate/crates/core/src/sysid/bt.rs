//! Blackman-Tukey frequency-response estimation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::FrequencyResponse;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lti::FrequencyGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtOptions {
    /// Largest correlation lag in samples; `None` uses an eighth of the record.
    pub max_lag: Option<usize>,
    /// Remove the mean of both signals first.
    pub detrend: bool,
    pub exec: Execution,
}

impl Default for BtOptions {
    fn default() -> Self {
        Self { max_lag: None, detrend: false, exec: Execution::Auto }
    }
}

/// Relative floor on the input auto-spectrum below which a point is invalid.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// Sample cross-correlations `r_ab[tau] = (1/N) sum_n a[n + tau] b[n]` for
/// `tau` in `0..=max_lag`, both signs, via zero-padded FFTs.
struct Correlations {
    /// `r[tau]` for `tau >= 0`
    pos: Vec<f64>,
    /// `r[-tau]` for `tau >= 0`
    neg: Vec<f64>,
}

fn spectra(
    planner: &mut FftPlanner<f64>,
    x: &[f64],
    nfft: usize,
) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(nfft).process(&mut buf);
    buf
}

fn correlate(
    planner: &mut FftPlanner<f64>,
    a: &[Complex64],
    b: &[Complex64],
    n: usize,
    max_lag: usize,
) -> Correlations {
    let nfft = a.len();
    let mut prod: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x * y.conj()).collect();
    planner.plan_fft_inverse(nfft).process(&mut prod);
    let scale = 1.0 / (nfft as f64 * n as f64);
    let pos = (0..=max_lag).map(|t| prod[t].re * scale).collect();
    let neg = (0..=max_lag).map(|t| prod[(nfft - t) % nfft].re * scale).collect();
    Correlations { pos, neg }
}

/// Hann lag window `0.5 (1 + cos(pi tau / L))`.
pub fn hann_lag_window(max_lag: usize) -> Vec<f64> {
    let l = max_lag as f64;
    (0..=max_lag).map(|t| 0.5 * (1.0 + (PI * t as f64 / l).cos())).collect()
}

/// Estimate `H = Phi_yu / Phi_uu` on `grid` from equal-length records.
///
/// Correlations are computed over the whole record, tapered with a Hann lag
/// window and transformed at each grid frequency. The 1-sigma magnitude band is
/// `|H| sqrt((1 - g2) / (2 n_eff g2))` with `g2` the coherence and
/// `n_eff = N / sum w(tau)^2` over all lags.
pub fn estimate_frf(
    u: &[f64],
    y: &[f64],
    dt: f64,
    grid: &FrequencyGrid,
    opts: &BtOptions,
) -> Result<FrequencyResponse> {
    if u.len() != y.len() {
        return Err(Error::Signal(format!(
            "input and output lengths differ ({} vs {})",
            u.len(),
            y.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let n = u.len();
    let max_lag = opts.max_lag.unwrap_or(n / 8);
    if max_lag < 2 || n < 2 * max_lag {
        return Err(Error::Signal(format!(
            "record of {n} samples is too short for a maximum lag of {max_lag}"
        )));
    }
    if u.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Signal("non-finite sample".into()));
    }

    let demean = |x: &[f64]| -> Vec<f64> {
        if opts.detrend {
            let m = x.iter().sum::<f64>() / n as f64;
            x.iter().map(|v| v - m).collect()
        } else {
            x.to_vec()
        }
    };
    let (u, y) = (demean(u), demean(y));

    let nfft = (n + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fu = spectra(&mut planner, &u, nfft);
    let fy = spectra(&mut planner, &y, nfft);
    let r_uu = correlate(&mut planner, &fu, &fu, n, max_lag);
    let r_yy = correlate(&mut planner, &fy, &fy, n, max_lag);
    let r_yu = correlate(&mut planner, &fy, &fu, n, max_lag);
    drop((fu, fy));

    let w = hann_lag_window(max_lag);
    let w2: f64 = w[0] * w[0] + 2.0 * w[1..].iter().map(|v| v * v).sum::<f64>();
    let n_eff = n as f64 / w2;

    // windowed correlations, shared across frequencies
    let a_uu: Vec<f64> = (0..=max_lag).map(|t| w[t] * r_uu.pos[t]).collect();
    let a_yy: Vec<f64> = (0..=max_lag).map(|t| w[t] * r_yy.pos[t]).collect();
    let c_pos: Vec<f64> = (0..=max_lag).map(|t| w[t] * r_yu.pos[t]).collect();
    let c_neg: Vec<f64> = (0..=max_lag).map(|t| w[t] * r_yu.neg[t]).collect();

    let points = exec::map(opts.exec, grid.omegas(), |&omega| {
        // phasor recurrence, re-anchored periodically against drift
        let step = Complex64::from_polar(1.0, -omega * dt);
        let mut z = Complex64::new(1.0, 0.0);
        let (mut s_uu, mut s_yy) = (a_uu[0], a_yy[0]);
        let mut s_yu = Complex64::new(c_pos[0], 0.0);
        for t in 1..=max_lag {
            if t % 1024 == 0 {
                z = Complex64::from_polar(1.0, -omega * dt * t as f64);
            } else {
                z *= step;
            }
            s_uu += 2.0 * a_uu[t] * z.re;
            s_yy += 2.0 * a_yy[t] * z.re;
            // r(tau) e^{-j w tau} + r(-tau) e^{+j w tau}
            s_yu += c_pos[t] * z + c_neg[t] * z.conj();
        }
        (s_uu, s_yy, s_yu)
    });

    let peak = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let mut h = Vec::with_capacity(points.len());
    let mut sigma = Vec::with_capacity(points.len());
    let mut coherence = Vec::with_capacity(points.len());
    let mut valid = Vec::with_capacity(points.len());
    for (s_uu, s_yy, s_yu) in points {
        let ok = s_uu > SPECTRUM_FLOOR * peak && s_uu.is_finite() && peak > 0.0;
        if !ok {
            h.push(Complex64::new(f64::NAN, f64::NAN));
            sigma.push(f64::NAN);
            coherence.push(0.0);
            valid.push(false);
            continue;
        }
        let hv = s_yu / s_uu;
        let g2 = if s_yy > 0.0 { (s_yu.norm_sqr() / (s_uu * s_yy)).clamp(0.0, 1.0) } else { 0.0 };
        let sig = if g2 > 0.0 {
            hv.norm() * ((1.0 - g2) / (2.0 * n_eff * g2)).sqrt()
        } else {
            f64::INFINITY
        };
        h.push(hv);
        sigma.push(sig);
        coherence.push(g2);
        valid.push(true);
    }
    FrequencyResponse::new(grid.clone(), h, sigma, coherence, valid)
}
