//! Lumped parameters from the three sub-plant responses.

use num_complex::Complex64;

use super::FrequencyResponse;
use crate::error::{Error, Result};
use crate::plant::PlantParams;

/// Sub-plant responses from a common experiment.
#[derive(Debug, Clone)]
pub struct SubFrfs {
    /// `X / F_p`, motor side.
    pub motor: FrequencyResponse,
    /// `X_e / (F_e - F_p)`, endpoint side.
    pub endpoint: FrequencyResponse,
    /// `F_p / (X_e - X)`, hydraulic line.
    pub line: FrequencyResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Fitting band in rad/s.
    pub band: (f64, f64),
    /// Sub-fit relative residual above which the result is flagged.
    pub residual_threshold: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { band: (1.0, 400.0), residual_threshold: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extracted {
    /// Linear parameters; hysteresis fields are zero.
    pub params: PlantParams,
    /// Relative residuals of the motor, endpoint and line fits.
    pub residuals: [f64; 3],
    pub flagged: bool,
}

/// Weighted fit of `c2 (j w)^2 + c1 (j w) + c0` to `g` at the given points:
/// `Re g = c0 - c2 w^2`, `Im g = c1 w`. Returns `(c2, c1, c0, relative residual)`.
fn quadratic(points: &[(f64, Complex64, f64)]) -> Result<(f64, f64, f64, f64)> {
    // 2x2 normal equations for (c2, c0), scalar one for c1
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t11, mut q1) = (0.0, 0.0);
    for &(w, g, wt) in points {
        let x = -w * w;
        s11 += wt * x * x;
        s12 += wt * x;
        s22 += wt;
        r1 += wt * x * g.re;
        r2 += wt * g.re;
        t11 += wt * w * w;
        q1 += wt * w * g.im;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-14 * s11 * s22) || !(t11 > 0.0) {
        return Err(Error::FitFailure("sub-plant fit is singular (too few distinct frequencies)".into()));
    }
    let c2 = (r1 * s22 - r2 * s12) / det;
    let c0 = (s11 * r2 - s12 * r1) / det;
    let c1 = q1 / t11;
    Ok((c2, c1, c0, rel_residual(points, |w| Complex64::new(c0 - c2 * w * w, c1 * w))))
}

/// Weighted fit of `c1 (j w) + c0`.
fn linear(points: &[(f64, Complex64, f64)]) -> Result<(f64, f64, f64)> {
    let (mut a, mut ra, mut b, mut rb) = (0.0, 0.0, 0.0, 0.0);
    for &(w, g, wt) in points {
        a += wt;
        ra += wt * g.re;
        b += wt * w * w;
        rb += wt * w * g.im;
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::FitFailure("line fit has no usable points".into()));
    }
    let (c0, c1) = (ra / a, rb / b);
    Ok((c1, c0, rel_residual(points, |w| Complex64::new(c0, c1 * w))))
}

fn rel_residual(points: &[(f64, Complex64, f64)], model: impl Fn(f64) -> Complex64) -> f64 {
    let (mut e, mut t) = (0.0, 0.0);
    for &(w, g, wt) in points {
        e += wt * (g - model(w)).norm_sqr();
        t += wt * g.norm_sqr();
    }
    (e / t).sqrt()
}

/// Band points of `frf` as `(omega, g, weight)`, with `g = 1/H` when `invert`.
/// The inverse inherits the relative uncertainty of `H`.
fn points(frf: &FrequencyResponse, band: (f64, f64), invert: bool) -> Vec<(f64, Complex64, f64)> {
    frf.band(band.0, band.1)
        .into_iter()
        .map(|i| {
            let w = frf.omegas()[i];
            let h = frf.h[i];
            let rel_weight = frf.weight(i) * h.norm_sqr();
            if invert {
                let g = 1.0 / h;
                (w, g, rel_weight / g.norm_sqr())
            } else {
                (w, h, frf.weight(i))
            }
        })
        .filter(|(_, g, wt)| g.re.is_finite() && g.im.is_finite() && wt.is_finite())
        .collect()
}

/// Fit `1/(m s^2 + b s + k)` to the motor and endpoint responses and
/// `b_s s + k_s` to the line response.
pub fn extract_params(subs: &SubFrfs, opts: &ExtractOptions) -> Result<Extracted> {
    let (m, b, k, r_motor) = quadratic(&points(&subs.motor, opts.band, true))?;
    let (m_e, b_e, k_e, r_end) = quadratic(&points(&subs.endpoint, opts.band, true))?;
    let (b_s, k_s, r_line) = linear(&points(&subs.line, opts.band, false))?;
    let params = PlantParams { m, b, k, m_e, b_e, k_e, b_s, k_s, f_c: 0.0, sigma: 0.0, n_dahl: 1.0 };
    let residuals = [r_motor, r_end, r_line];
    let flagged = residuals.iter().any(|r| !(*r <= opts.residual_threshold)) || params.validate().is_err();
    if flagged {
        log::warn!("sub-plant fit flagged: residuals {residuals:?}");
    }
    Ok(Extracted { params, residuals, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{FrequencyGrid, RationalTf};

    #[test]
    fn exact_subplants_recover_parameters() {
        let p = PlantParams::identified();
        let grid = FrequencyGrid::log_space(0.1, 1000.0, 200).unwrap();
        let motor = RationalTf::from_coeffs(&[1.0], &[p.m, p.b, p.k]).unwrap();
        let endpoint = RationalTf::from_coeffs(&[1.0], &[p.m_e, p.b_e, p.k_e]).unwrap();
        let line = RationalTf::from_coeffs(&[p.b_s, p.k_s], &[1.0]).unwrap();
        let subs = SubFrfs {
            motor: FrequencyResponse::from_tf(&motor, &grid),
            endpoint: FrequencyResponse::from_tf(&endpoint, &grid),
            line: FrequencyResponse::from_tf(&line, &grid),
        };
        let ex = extract_params(&subs, &ExtractOptions::default()).unwrap();
        let q = ex.params;
        for (a, b) in [
            (q.m, p.m),
            (q.b, p.b),
            (q.k, p.k),
            (q.m_e, p.m_e),
            (q.b_e, p.b_e),
            (q.k_e, p.k_e),
            (q.b_s, p.b_s),
            (q.k_s, p.k_s),
        ] {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
        }
        assert!(!ex.flagged);
    }
}
