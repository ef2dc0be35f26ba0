//! Least-squares fit of the first-order Dahl branch model to a work loop.
//!
//! After a reversal at `(x0, F0)` in direction `s`, an `n = 1` Dahl element
//! follows
//!
//! ```text
//! F(x) = s F_c + (F0 - s F_c) exp(-sigma |x - x0| / F_c)
//! ```
//!
//! Both branches are fitted jointly, anchored at the loop extremes.

use super::WorkLoop;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DahlFit {
    pub f_c: f64,
    pub sigma: f64,
    /// RMS model error divided by the loop force range.
    pub residual: f64,
    pub iterations: usize,
}

/// Loops with `|area|` below this fraction of `force range * position range`
/// are treated as non-hysteretic.
pub const AREA_FLOOR: f64 = 1e-6;

struct Branch {
    x0: f64,
    f0: f64,
    dir: f64,
    pts: Vec<(f64, f64)>,
}

fn model(b: &Branch, f_c: f64, sigma: f64, x: f64) -> f64 {
    let t = b.dir * f_c;
    t + (b.f0 - t) * (-sigma * (x - b.x0).abs() / f_c).exp()
}

fn residuals(branches: &[Branch], f_c: f64, sigma: f64) -> Vec<f64> {
    branches
        .iter()
        .flat_map(|b| b.pts.iter().map(move |&(x, f)| model(b, f_c, sigma, x) - f))
        .collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Starting point from the slope relation `dF/dx = sigma - (sigma/F_c) s F`,
/// linear in `s F` along each branch.
fn initial_guess(branches: &[Branch]) -> Option<(f64, f64)> {
    let (mut n, mut sz, mut sy, mut szz, mut szy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for b in branches {
        for w in b.pts.windows(2) {
            let dx = w[1].0 - w[0].0;
            if dx == 0.0 {
                continue;
            }
            let y = (w[1].1 - w[0].1) / dx;
            let z = b.dir * 0.5 * (w[0].1 + w[1].1);
            n += 1.0;
            sz += z;
            sy += y;
            szz += z * z;
            szy += z * y;
        }
    }
    let det = n * szz - sz * sz;
    if !(det > 0.0) {
        return None;
    }
    let slope = (n * szy - sz * sy) / det;
    let sigma = (sy - slope * sz) / n;
    let f_c = -sigma / slope;
    (sigma > 0.0 && f_c > 0.0 && f_c.is_finite()).then_some((f_c, sigma))
}

/// Fit `(F_c, sigma)` to both branches of `lp`.
pub fn fit_dahl(lp: &WorkLoop) -> Result<DahlFit> {
    let (xlo, xhi) = lp.position_range();
    let (flo, fhi) = lp.force_range();
    let (dx, df) = (xhi - xlo, fhi - flo);
    if !(lp.area.abs() > AREA_FLOOR * df * dx) {
        return Err(Error::FitFailure(format!(
            "non-hysteretic loop (area {:.3e} J), Dahl fit rejected",
            lp.area
        )));
    }
    let (rising, falling) = lp.branches();
    if rising.len() < 3 || falling.len() < 3 {
        return Err(Error::FitFailure("loop branches have too few samples".into()));
    }
    let r0 = rising[0];
    let f0 = falling[falling.len() - 1];
    let branches = [
        Branch { x0: r0.0, f0: r0.1, dir: 1.0, pts: rising[1..].to_vec() },
        Branch { x0: f0.0, f0: f0.1, dir: -1.0, pts: falling[..falling.len() - 1].iter().rev().copied().collect() },
    ];

    let (fc0, s0) = initial_guess(&branches).unwrap_or((0.5 * df, 4.0 * df / dx));
    // log parameters keep both positive
    let mut p = [fc0.ln(), s0.ln()];
    let eval = |p: &[f64; 2]| residuals(&branches, p[0].exp(), p[1].exp());
    let mut r = eval(&p);
    let mut cost = sum_sq(&r);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        // forward-difference Jacobian
        let h = 1e-7;
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|j| {
                let mut q = p;
                q[j] += h;
                eval(&q).iter().zip(&r).map(|(a, b)| (a - b) / h).collect()
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (a11, a12, a22) = (dot(&cols[0], &cols[0]), dot(&cols[0], &cols[1]), dot(&cols[1], &cols[1]));
        let (g1, g2) = (dot(&cols[0], &r), dot(&cols[1], &r));
        let mut improved = false;
        while mu < 1e12 {
            let (b11, b22) = (a11 * (1.0 + mu), a22 * (1.0 + mu));
            let det = b11 * b22 - a12 * a12;
            if det <= 0.0 {
                mu *= 10.0;
                continue;
            }
            let step = [-(b22 * g1 - a12 * g2) / det, -(b11 * g2 - a12 * g1) / det];
            let q = [p[0] + step[0], p[1] + step[1]];
            let rq = eval(&q);
            let cq = sum_sq(&rq);
            if cq.is_finite() && cq < cost {
                let rel = (cost - cq) / cost.max(f64::MIN_POSITIVE);
                p = q;
                r = rq;
                cost = cq;
                mu = (mu / 10.0).max(1e-12);
                improved = rel > 1e-14 && step[0].abs().max(step[1].abs()) > 1e-12;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let residual = (cost / r.len() as f64).sqrt() / df;
    let (f_c, sigma) = (p[0].exp(), p[1].exp());
    if !(f_c.is_finite() && sigma.is_finite()) {
        return Err(Error::FitFailure("Dahl fit did not converge".into()));
    }
    Ok(DahlFit { f_c, sigma, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::synthesize_dahl_loop;
    use crate::plant::DahlParams;

    #[test]
    fn recovers_synthetic_parameters() {
        let d = DahlParams { f_c: 0.032, sigma: 12.8, n: 1.0 };
        for amp in [0.01, 0.05, 0.5] {
            let lp = synthesize_dahl_loop(&d, amp, 4000, 3).unwrap();
            let fit = fit_dahl(&lp).unwrap();
            assert!((fit.f_c - d.f_c).abs() / d.f_c < 1e-3, "{amp}: {fit:?}");
            assert!((fit.sigma - d.sigma).abs() / d.sigma < 1e-3, "{amp}: {fit:?}");
        }
    }

    #[test]
    fn rejects_zero_area_loop() {
        let n = 500;
        let x: Vec<f64> = (0..=n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        let f: Vec<f64> = x.iter().map(|v| 0.1 * v).collect();
        let lp = WorkLoop::from_cycle(x, f).unwrap();
        assert!(matches!(fit_dahl(&lp), Err(Error::FitFailure(_))));
    }
}
