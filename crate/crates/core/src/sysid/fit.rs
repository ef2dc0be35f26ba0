//! Rational model fitting by iteratively reweighted linear least squares
//! (Sanathanan-Koerner).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::FrequencyResponse;
use crate::error::{Error, Result};
use crate::lti::{Polynomial, RationalTf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSpec {
    pub n_zeros: usize,
    pub n_poles: usize,
    /// Fitting band in rad/s, inclusive.
    pub band: (f64, f64),
    pub max_iter: usize,
    /// Stop once the relative parameter change falls below this.
    pub tol: f64,
    /// Mirror right-half-plane poles of the result into the left half plane.
    pub reflect_unstable: bool,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { n_zeros: 2, n_poles: 4, band: (0.0, 400.0), max_iter: 50, tol: 1e-8, reflect_unstable: false }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub tf: RationalTf,
    /// `sqrt(sum w |H - model|^2 / sum w |H|^2)` over the band.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each accepted iteration; non-increasing.
    pub history: Vec<f64>,
    /// Condition number of the last least-squares system (column-scaled).
    pub condition: f64,
}

/// Singular-value ratio below which the normal equations count as rank deficient.
const RANK_TOL: f64 = 1e-13;

/// Fit `N(s)/D(s)` with `deg N = n_zeros`, `deg D = n_poles` (monic) to `frf`
/// inside the band, inverse-variance weighted.
///
/// Each pass solves the linearized problem `(N - H D) / D_prev = 0` in a
/// frequency variable normalized to the band edge. Iteration stops on
/// convergence, at `max_iter`, or as soon as the residual would grow; the best
/// model so far is returned.
pub fn fit_tf(frf: &FrequencyResponse, spec: &FitSpec) -> Result<FitResult> {
    if spec.n_zeros >= spec.n_poles {
        return Err(Error::param("n_zeros", "must be smaller than n_poles"));
    }
    let idx = frf.band(spec.band.0, spec.band.1);
    let n_par = spec.n_zeros + 1 + spec.n_poles;
    if idx.len() < 4 * (spec.n_zeros + spec.n_poles) {
        return Err(Error::FitFailure(format!(
            "{} valid points in band, need at least {}",
            idx.len(),
            4 * (spec.n_zeros + spec.n_poles)
        )));
    }
    let w_n = idx.iter().map(|&i| frf.omegas()[i]).fold(0.0, f64::max);
    let s: Vec<Complex64> = idx.iter().map(|&i| Complex64::new(0.0, frf.omegas()[i] / w_n)).collect();
    let h: Vec<Complex64> = idx.iter().map(|&i| frf.h[i]).collect();
    let sw: Vec<f64> = idx.iter().map(|&i| frf.weight(i).sqrt()).collect();

    let residual = |num: &Polynomial, den: &Polynomial| -> f64 {
        let (mut e, mut t) = (0.0, 0.0);
        for k in 0..s.len() {
            let model = num.eval_complex(s[k]) / den.eval_complex(s[k]);
            e += (sw[k] * (h[k] - model).norm()).powi(2);
            t += (sw[k] * h[k].norm()).powi(2);
        }
        (e / t).sqrt()
    };

    let mut prev_den = Polynomial::constant(1.0);
    let mut prev_theta: Option<DVector<f64>> = None;
    let mut best: Option<(Polynomial, Polynomial, f64)> = None;
    let mut history = Vec::new();
    let mut condition = 0.0;
    let mut iterations = 0;

    for _ in 0..spec.max_iter.max(1) {
        let rows = 2 * s.len();
        let mut a = DMatrix::<f64>::zeros(rows, n_par);
        let mut rhs = DVector::<f64>::zeros(rows);
        for k in 0..s.len() {
            let scale = sw[k] / prev_den.eval_complex(s[k]);
            let mut sp = Complex64::new(1.0, 0.0);
            let mut powers = Vec::with_capacity(spec.n_poles + 1);
            for _ in 0..=spec.n_poles {
                powers.push(sp);
                sp *= s[k];
            }
            for j in 0..=spec.n_zeros {
                let v = powers[j] * scale;
                a[(2 * k, j)] = v.re;
                a[(2 * k + 1, j)] = v.im;
            }
            for j in 0..spec.n_poles {
                let v = -h[k] * powers[j] * scale;
                a[(2 * k, spec.n_zeros + 1 + j)] = v.re;
                a[(2 * k + 1, spec.n_zeros + 1 + j)] = v.im;
            }
            let r = h[k] * powers[spec.n_poles] * scale;
            rhs[2 * k] = r.re;
            rhs[2 * k + 1] = r.im;
        }
        // column equilibration before the SVD
        let norms: Vec<f64> = (0..n_par).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
        for (j, n) in norms.iter().enumerate() {
            a.column_mut(j).scale_mut(1.0 / n);
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        condition = smax / smin;
        if !(smin > RANK_TOL * smax) {
            return Err(Error::FitFailure(format!(
                "rank-deficient least-squares system (condition number {condition:.3e})"
            )));
        }
        let mut theta = svd
            .solve(&rhs, RANK_TOL * smax)
            .map_err(|e| Error::FitFailure(e.to_string()))?;
        for j in 0..n_par {
            theta[j] /= norms[j];
        }
        iterations += 1;

        let num = Polynomial::from_ascending(theta.as_slice()[..=spec.n_zeros].as_ref());
        let mut den_c: Vec<f64> = theta.as_slice()[spec.n_zeros + 1..].to_vec();
        den_c.push(1.0);
        let den = Polynomial::from_ascending(&den_c);
        let r = residual(&num, &den);
        if !r.is_finite() {
            break;
        }
        if let Some((_, _, rb)) = &best {
            if r > *rb {
                break;
            }
        }
        history.push(r);
        best = Some((num, den.clone(), r));
        let change = prev_theta
            .as_ref()
            .map(|p| (&theta - p).norm() / theta.norm().max(f64::MIN_POSITIVE));
        prev_theta = Some(theta);
        prev_den = den;
        if change.is_some_and(|c| c < spec.tol) {
            break;
        }
    }

    let (num, den, r) = best.ok_or_else(|| Error::FitFailure("no finite model".into()))?;
    // back from s / w_n to s
    let unscale = |p: &Polynomial| {
        let asc: Vec<f64> = (0..=p.degree()).map(|i| p.coeff(i) / w_n.powi(i as i32)).collect();
        Polynomial::from_ascending(&asc)
    };
    let mut tf = RationalTf::new(unscale(&num), unscale(&den))?;
    if spec.reflect_unstable {
        tf = tf.reflect_unstable_poles()?;
    }
    Ok(FitResult { tf, residual: r, iterations, history, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::FrequencyGrid;

    fn model() -> RationalTf {
        // two lightly damped modes and a zero pair
        let num = &Polynomial::new(vec![1.0, 3.0, 900.0]) * &Polynomial::constant(50.0);
        let den = &Polynomial::new(vec![1.0, 2.0, 400.0]) * &Polynomial::new(vec![1.0, 10.0, 10_000.0]);
        RationalTf::new(num, den).unwrap()
    }

    #[test]
    fn recovers_exact_model() {
        let truth = model();
        let grid = FrequencyGrid::log_space(0.5, 400.0, 300).unwrap();
        let frf = FrequencyResponse::from_tf(&truth, &grid);
        let fit = fit_tf(&frf, &FitSpec::default()).unwrap();
        for (a, b) in fit.tf.den().coeffs().iter().zip(truth.den().coeffs()) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "den {a} vs {b}");
        }
        for (a, b) in fit.tf.num().coeffs().iter().zip(truth.num().coeffs()) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "num {a} vs {b}");
        }
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn history_is_monotone() {
        let grid = FrequencyGrid::log_space(0.5, 400.0, 200).unwrap();
        let mut frf = FrequencyResponse::from_tf(&model(), &grid);
        // deterministic perturbation
        for (i, h) in frf.h.iter_mut().enumerate() {
            *h *= 1.0 + 0.05 * ((i * 7919 % 13) as f64 / 13.0 - 0.5);
        }
        let fit = fit_tf(&frf, &FitSpec::default()).unwrap();
        assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn too_few_points() {
        let grid = FrequencyGrid::log_space(1.0, 400.0, 20).unwrap();
        let frf = FrequencyResponse::from_tf(&model(), &grid);
        assert!(matches!(fit_tf(&frf, &FitSpec::default()), Err(Error::FitFailure(_))));
    }

    #[test]
    fn degenerate_data_reports_condition() {
        let grid = FrequencyGrid::log_space(1.0, 400.0, 100).unwrap();
        let frf = FrequencyResponse::from_tf(&RationalTf::constant(0.0), &grid);
        let mut frf = frf;
        frf.sigma.iter_mut().for_each(|s| *s = 1.0);
        match fit_tf(&frf, &FitSpec::default()) {
            Err(Error::FitFailure(msg)) => assert!(msg.contains("condition") || msg.contains("finite")),
            other => panic!("{other:?}"),
        }
    }
}
