//! Passivity of the DOB-controlled motor port and low-frequency endpoint
//! impedance of force-feedback loops.
//!
//! A one-port LTI admittance is passive iff it is positive real:
//!
//! 1. no poles in the open right half plane,
//! 2. poles on the imaginary axis are simple with positive real residues,
//! 3. `Re Y(jw) >= 0` for all `w`.
//!
//! For the DOB loop with nominal plant `m_n s + b_n + k_n/s` the admittance is
//! `Y = s(s+l) / (m s^3 + (l m_n + b) s^2 + (k + l b_n) s + l k_n)` and the three
//! conditions reduce to `m_n >= m - b/l` and `0 <= k_n <= k + l b_n`.

mod network;

use std::fmt;

use num_complex::Complex64;

pub use network::{
    endpoint_compliance, endpoint_impedance_ff, low_freq_limits, network_impedance, LinearLaw,
    LowFreqLimits,
};

use crate::error::{Error, Result};
use crate::lti::{FrequencyGrid, ImagPoleResidue, Polynomial, RationalTf};
use crate::plant::PlantParams;

/// Nominal plant `m_n s + b_n + k_n / s` of a disturbance observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nominal {
    pub m_n: f64,
    pub b_n: f64,
    pub k_n: f64,
}

/// Motor-port admittance `V/F` of the DOB-controlled motor.
pub fn dob_admittance(params: &PlantParams, nominal: &Nominal, lambda: f64) -> Result<RationalTf> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be > 0"));
    }
    let (m, b, k) = (params.m, params.b, params.k);
    let num = Polynomial::new(vec![1.0, lambda, 0.0]);
    let den = Polynomial::new(vec![
        m,
        lambda * nominal.m_n + b,
        k + lambda * nominal.b_n,
        lambda * nominal.k_n,
    ]);
    RationalTf::new(num, den)
}

/// Closed-form passivity region of the DOB nominal parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalBounds {
    pub m: f64,
    pub b: f64,
    pub k: f64,
    pub lambda: f64,
    /// `m - b / lambda`.
    pub m_n_min: f64,
    /// `-k / lambda`: below this no `k_n >= 0` is admissible.
    pub b_n_min: f64,
}

pub fn nominal_bounds(m: f64, b: f64, k: f64, lambda: f64) -> Result<NominalBounds> {
    if !(m > 0.0) || !(lambda > 0.0) {
        return Err(Error::param("m, lambda", "must be > 0"));
    }
    if !(b >= 0.0) || !(k >= 0.0) {
        return Err(Error::param("b, k", "must be >= 0"));
    }
    Ok(NominalBounds { m, b, k, lambda, m_n_min: m - b / lambda, b_n_min: -k / lambda })
}

impl NominalBounds {
    /// Largest passive `k_n` for a given `b_n`, `max(0, k + lambda b_n)`.
    pub fn k_n_max(&self, b_n: f64) -> f64 {
        (self.k + self.lambda * b_n).max(0.0)
    }

    /// Stability cap on `k_n` from the Routh array of the cubic denominator,
    /// `(lambda m_n + b)(lambda b_n + k) / (lambda m)`.
    pub fn routh_k_n_cap(&self, m_n: f64, b_n: f64) -> f64 {
        (self.lambda * m_n + self.b) * (self.lambda * b_n + self.k) / (self.lambda * self.m)
    }

    pub fn contains(&self, n: &Nominal) -> bool {
        self.margin(n) >= 0.0
    }

    /// Signed distance to the boundary of the passive region, each constraint
    /// normalized by the magnitude of the terms it compares. Negative outside.
    pub fn margin(&self, n: &Nominal) -> f64 {
        let l = self.lambda;
        let inertia = (l * n.m_n + self.b - l * self.m) / (l * n.m_n.abs() + self.b + l * self.m);
        let stiff_scale = self.k + l * n.b_n.abs() + n.k_n.abs();
        let upper = (self.k + l * n.b_n - n.k_n) / stiff_scale;
        let lower = n.k_n / stiff_scale;
        inertia.min(upper).min(lower)
    }
}

impl fmt::Display for NominalBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DOB nominal plant passivity bounds")?;
        writeln!(f, "  m = {:e}, b = {:e}, k = {:e}, lambda = {} rad/s", self.m, self.b, self.k, self.lambda)?;
        writeln!(f, "  m_n >= m - b/lambda = {:.6e} Nm/(rad/s^2)", self.m_n_min)?;
        writeln!(f, "  b_n >= -k/lambda    = {:.6e} Nm/(rad/s)", self.b_n_min)?;
        writeln!(f, "  0 <= k_n <= k + lambda b_n  (b_n = 0: k_n <= {:.6e} Nm/rad)", self.k_n_max(0.0))?;
        write!(f, "  stability cap k_n <= (lambda m_n + b)(lambda b_n + k)/(lambda m)")
    }
}

/// First positive-real condition that fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    RhpPole,
    ImaginaryPole,
    NegativeRealPart,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::RhpPole => "(i) pole in the open right half plane",
            Criterion::ImaginaryPole => "(ii) imaginary-axis pole not simple with positive real residue",
            Criterion::NegativeRealPart => "(iii) Re Y(jw) < 0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Passive,
    NonPassive(Criterion),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityReport {
    pub rhp_poles: Vec<Complex64>,
    /// Imaginary-axis poles that are repeated or have a non-positive residue real part.
    /// A pole at infinity is listed with `pole = inf`.
    pub imag_pole_issues: Vec<ImagPoleResidue>,
    /// `(omega, Re Y)` at the grid minimum.
    pub min_real_part: (f64, f64),
    /// Frequencies where the exact sign analysis found `Re Y < 0`.
    pub negative_at: Vec<f64>,
    /// Grid frequencies skipped because they fall on a pole.
    pub skipped: Vec<f64>,
    pub sweep: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

impl PassivityReport {
    pub fn is_passive(&self) -> bool {
        self.verdict == Verdict::Passive
    }
}

impl fmt::Display for PassivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            Verdict::Passive => writeln!(f, "verdict: passive")?,
            Verdict::NonPassive(c) => writeln!(f, "verdict: non-passive, fails {c}")?,
        }
        writeln!(f, "right-half-plane poles: {}", self.rhp_poles.len())?;
        for p in &self.rhp_poles {
            writeln!(f, "  {p}")?;
        }
        writeln!(f, "imaginary-axis pole issues: {}", self.imag_pole_issues.len())?;
        for i in &self.imag_pole_issues {
            match i.residue {
                Some(r) => writeln!(f, "  pole {} residue {}", i.pole, r)?,
                None => writeln!(f, "  pole {} multiplicity {}", i.pole, i.multiplicity)?,
            }
        }
        writeln!(
            f,
            "min Re Y over grid: {:.6e} at omega = {:.6e} rad/s",
            self.min_real_part.1, self.min_real_part.0
        )?;
        if !self.negative_at.is_empty() {
            writeln!(f, "Re Y < 0 near omega = {:?} rad/s", self.negative_at)?;
        }
        if !self.skipped.is_empty() {
            writeln!(f, "grid points on poles (skipped): {:?}", self.skipped)?;
        }
        Ok(())
    }
}

/// Smallest grid accepted by [`check_passive`].
pub const MIN_GRID_POINTS: usize = 400;

/// Default analysis grid: 601 log-spaced points over `[1e-2, 1e4]` rad/s.
pub fn default_grid() -> FrequencyGrid {
    FrequencyGrid::log_space(1e-2, 1e4, 601).expect("static grid")
}

const COEFF_ZERO_TOL: f64 = 1e-12;

/// Positive-real test of `tf`, criteria checked in order (i), (ii), (iii).
///
/// Criterion (iii) is decided by the exact sign pattern of the even polynomial
/// `Re[N(jw) D(-jw)]` in `u = w^2`; the grid sweep is reported alongside.
pub fn check_passive(tf: &RationalTf, grid: &FrequencyGrid) -> Result<PassivityReport> {
    if grid.first() > 1e-2 || grid.last() < 1e4 || grid.len() < MIN_GRID_POINTS {
        return Err(Error::InvalidGrid(format!(
            "passivity grid must span [1e-2, 1e4] rad/s with >= {MIN_GRID_POINTS} points"
        )));
    }

    let clusters = tf.pole_clusters()?;
    let rhp_poles: Vec<Complex64> = clusters.iter().filter(|c| c.is_rhp()).map(|c| c.value).collect();

    let mut imag_pole_issues: Vec<ImagPoleResidue> = tf
        .residues_at_imag_poles()?
        .into_iter()
        .filter(|r| match r.residue {
            Some(res) => !(res.re > 0.0),
            None => true,
        })
        .collect();
    // behaviour at infinity: Y ~ c s^(deg N - deg D)
    let excess = tf.num().degree() as i64 - tf.den().degree() as i64;
    if !tf.num().is_zero() && excess >= 1 {
        let lead = tf.num().leading() / tf.den().leading();
        if excess > 1 || !(lead > 0.0) {
            imag_pole_issues.push(ImagPoleResidue {
                pole: Complex64::new(0.0, f64::INFINITY),
                multiplicity: excess as usize,
                residue: (excess == 1).then_some(Complex64::new(lead, 0.0)),
            });
        }
    }

    let mut sweep = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    let mut min_real_part = (f64::NAN, f64::INFINITY);
    let mut grid_negative = false;
    for &w in grid.omegas() {
        match tf.eval(w) {
            Ok(y) => {
                sweep.push((w, y.re));
                if y.re < min_real_part.1 {
                    min_real_part = (w, y.re);
                }
                if y.re < -1e-9 * y.norm() {
                    grid_negative = true;
                }
            }
            Err(Error::PoleOnAxis { .. }) => skipped.push(w),
            Err(e) => return Err(e),
        }
    }

    let negative_at = negative_real_part(tf)?;

    let verdict = if !rhp_poles.is_empty() {
        Verdict::NonPassive(Criterion::RhpPole)
    } else if !imag_pole_issues.is_empty() {
        Verdict::NonPassive(Criterion::ImaginaryPole)
    } else if !negative_at.is_empty() || grid_negative {
        Verdict::NonPassive(Criterion::NegativeRealPart)
    } else {
        Verdict::Passive
    };
    Ok(PassivityReport { rhp_poles, imag_pole_issues, min_real_part, negative_at, skipped, sweep, verdict })
}

/// `Re[N(jw) D(-jw)]` as a polynomial in `u = w^2` (ascending coefficients),
/// with the absolute scale of each coefficient for zero tests.
fn real_part_polynomial(tf: &RationalTf) -> (Vec<f64>, Vec<f64>) {
    let n = tf.num();
    let d = tf.den();
    let deg = n.degree() + d.degree();
    let mut c = vec![0.0; deg + 1];
    let mut scale = vec![0.0; deg + 1];
    for i in 0..=n.degree() {
        for j in 0..=d.degree() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = n.coeff(i) * d.coeff(j) * sign;
            c[i + j] += term;
            scale[i + j] += term.abs();
        }
    }
    let half = deg / 2;
    let mut e = Vec::with_capacity(half + 1);
    let mut es = Vec::with_capacity(half + 1);
    for i in 0..=half {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let (v, s) = (c[2 * i] * sign, scale[2 * i]);
        e.push(if v.abs() <= COEFF_ZERO_TOL * s { 0.0 } else { v });
        es.push(s);
    }
    (e, es)
}

/// Frequencies at which `Re Y(jw) < 0`, one per negative interval, from the
/// sign pattern of the even real-part polynomial between its positive roots.
fn negative_real_part(tf: &RationalTf) -> Result<Vec<f64>> {
    let (e, scale) = real_part_polynomial(tf);
    let p = Polynomial::from_ascending(&e);
    if p.is_zero() {
        return Ok(Vec::new());
    }
    let abs_p = Polynomial::from_ascending(&scale);
    let mut roots: Vec<f64> = if p.degree() == 0 {
        Vec::new()
    } else {
        p.roots()?
            .into_iter()
            .filter(|r| r.re > 0.0 && r.im.abs() <= 1e-6 * r.norm())
            .map(|r| r.re)
            .collect()
    };
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());

    let mut probes = Vec::new();
    match (roots.first(), roots.last()) {
        (Some(&lo), Some(&hi)) => {
            probes.push(lo / 2.0);
            probes.extend(roots.windows(2).map(|w| (w[0] * w[1]).sqrt()));
            probes.push(hi * 2.0);
        }
        _ => probes.push(1.0),
    }
    let mut out = Vec::new();
    for u in probes {
        if p.eval(u) < -COEFF_ZERO_TOL * abs_p.eval(u) {
            out.push(u.sqrt());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PlantParams {
        PlantParams::identified()
    }

    #[test]
    fn admittance_coefficients() {
        let p = table();
        let y = dob_admittance(&p, &Nominal { m_n: p.m, b_n: 0.0, k_n: 0.0 }, 20.0).unwrap();
        // the origin pole cancels against the numerator zero
        let den = y.den().scale(p.m);
        let expect = [1.1116e-3, 5.2046e-2, 0.1642];
        for (a, b) in den.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1e-3), "{a} vs {b}");
        }
        assert!(y.is_proper());
        assert!(y.dc_gain().unwrap().is_finite());
    }

    #[test]
    fn observer_off_limit_is_motor_admittance() {
        let p = table();
        let y = dob_admittance(&p, &Nominal { m_n: p.m, b_n: 0.0, k_n: 0.0 }, 1e-12).unwrap();
        let motor = RationalTf::from_coeffs(&[1.0, 0.0], &[p.m, p.b, p.k]).unwrap();
        for w in [0.1, 1.0, 10.0, 100.0] {
            let (a, b) = (y.eval(w).unwrap(), motor.eval(w).unwrap());
            assert!((a - b).norm() / b.norm() < 1e-9);
        }
    }

    #[test]
    fn bounds_examples() {
        let p = table();
        let nb = nominal_bounds(p.m, p.b, p.k, 20.0).unwrap();
        assert!((nb.m_n_min - (-3.791e-4)).abs() < 1e-7);
        assert_eq!(nb.k_n_max(0.0), 0.1642);
        assert_eq!(nominal_bounds(p.m, 0.0, p.k, 20.0).unwrap().m_n_min, p.m);
        assert!(nb.contains(&Nominal { m_n: 0.0, b_n: 0.0, k_n: 0.0 }));
    }

    #[test]
    fn first_order_lag_is_passive() {
        let y = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(check_passive(&y, &default_grid()).unwrap().is_passive());
    }

    #[test]
    fn integrator_and_inertia_are_passive() {
        let g = default_grid();
        assert!(check_passive(&RationalTf::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap(), &g).unwrap().is_passive());
        assert!(check_passive(&RationalTf::from_coeffs(&[2.0, 0.0], &[1.0]).unwrap(), &g).unwrap().is_passive());
        let r = check_passive(&RationalTf::from_coeffs(&[1.0, 0.0, 0.0], &[1.0]).unwrap(), &g).unwrap();
        assert_eq!(r.verdict, Verdict::NonPassive(Criterion::ImaginaryPole));
    }

    #[test]
    fn inertia_just_below_bound_fails_at_high_frequency() {
        let p = table();
        let lambda = 20.0;
        let m_n = p.m - p.b / lambda - 1e-5;
        let y = dob_admittance(&p, &Nominal { m_n, b_n: 0.0, k_n: 0.0 }, lambda).unwrap();
        let r = check_passive(&y, &default_grid()).unwrap();
        assert_eq!(r.verdict, Verdict::NonPassive(Criterion::NegativeRealPart));
        assert!(r.min_real_part.1 < 0.0);
        assert!(r.min_real_part.0 > 100.0);
    }

    #[test]
    fn rejects_short_grid() {
        let y = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let g = FrequencyGrid::log_space(1e-1, 1e4, 500).unwrap();
        assert!(matches!(check_passive(&y, &g), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn narrow_negative_dip_is_caught() {
        // Re Y(jw) numerator (u - 1)^2 - 1e-8, negative only for |u - 1| < 1e-4:
        // too narrow for a 601-point grid to resolve
        let y = narrow_dip();
        let r = check_passive(&y, &default_grid()).unwrap();
        assert_eq!(r.verdict, Verdict::NonPassive(Criterion::NegativeRealPart));
        assert!(r.negative_at.iter().any(|w| (w - 1.0).abs() < 1e-3));
    }

    // Y = (s^2 - (d/2) s + 1 - d) / (s+1)^2 has Re[N(jw) D(-jw)] = (u-1)^2 - d, u = w^2
    fn narrow_dip() -> RationalTf {
        let d = 1e-8;
        RationalTf::from_coeffs(&[1.0, -d / 2.0, 1.0 - d], &[1.0, 2.0, 1.0]).unwrap()
    }
}
