use std::fmt;

use num_complex::Complex64;

use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// A pole is on the imaginary axis when `|Re p| < AXIS_TOL * max(1, |p|)`.
pub const AXIS_TOL: f64 = 1e-9;

/// Roots closer than `CLUSTER_TOL * max(1, |p|)` are treated as one repeated root.
pub const CLUSTER_TOL: f64 = 1e-5;

/// Ratio of two real polynomials in `s`.
///
/// Stored normalized: common factors of `s` are cancelled exactly and the
/// denominator is monic (its leading coefficient is folded into the numerator).
#[derive(Clone, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
}

/// A group of numerically coincident roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleCluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl PoleCluster {
    pub fn is_imaginary(&self) -> bool {
        on_axis(self.value)
    }
    pub fn is_rhp(&self) -> bool {
        !self.is_imaginary() && self.value.re > 0.0
    }
}

/// Residue of a transfer function at a pole on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagPoleResidue {
    pub pole: Complex64,
    pub multiplicity: usize,
    /// `None` for non-simple poles, where a single residue does not characterize the pole.
    pub residue: Option<Complex64>,
}

impl ImagPoleResidue {
    pub fn is_simple(&self) -> bool {
        self.multiplicity == 1
    }
}

pub fn on_axis(p: Complex64) -> bool {
    p.re.abs() < AXIS_TOL * p.norm().max(1.0)
}

/// Group roots within [`CLUSTER_TOL`] of each other; cluster value is the centroid.
pub fn cluster_roots(roots: &[Complex64]) -> Vec<PoleCluster> {
    let mut assigned = vec![false; roots.len()];
    let mut clusters = Vec::new();
    for i in 0..roots.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let mut members = vec![roots[i]];
        // grow transitively so a tight triple is not split by ordering
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..roots.len() {
                if assigned[j] {
                    continue;
                }
                let near = members.iter().any(|m| {
                    (roots[j] - m).norm() <= CLUSTER_TOL * m.norm().max(roots[j].norm()).max(1.0)
                });
                if near {
                    assigned[j] = true;
                    members.push(roots[j]);
                    changed = true;
                }
            }
        }
        let n = members.len();
        let centroid = members.iter().sum::<Complex64>() / n as f64;
        clusters.push(PoleCluster {
            value: centroid,
            multiplicity: n,
        });
    }
    clusters
}

impl RationalTf {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if !num.is_finite() || !den.is_finite() {
            return Err(Error::MalformedPolynomial("non-finite coefficient".into()));
        }
        let common = if num.is_zero() {
            den.origin_multiplicity()
        } else {
            num.origin_multiplicity().min(den.origin_multiplicity())
        };
        let num = if num.is_zero() {
            num
        } else {
            num.deflate_origin(common)
        };
        let den = den.deflate_origin(common);
        let lead = den.leading();
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    /// Coefficients in descending order.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn constant(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
        }
    }

    /// First-order low-pass `lambda / (s + lambda)`.
    pub fn first_order_lowpass(lambda: f64) -> Result<Self> {
        Self::from_coeffs(&[lambda], &[1.0, lambda])
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    /// Response at an arbitrary complex `s`, without pole checks.
    pub fn eval_s(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Frequency response at `s = j omega`.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let d = self.den.eval_complex(s);
        if !(d.norm() > 1e-14 * self.den.abs_eval(omega.abs())) {
            return Err(Error::PoleOnAxis { omega });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Value at `s = 0` when finite.
    pub fn dc_gain(&self) -> Option<f64> {
        let d = self.den.coeff(0);
        (d != 0.0).then(|| self.num.coeff(0) / d)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() || self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    pub fn pole_clusters(&self) -> Result<Vec<PoleCluster>> {
        Ok(cluster_roots(&self.poles()?))
    }

    /// Residues at the imaginary-axis poles. Simple poles get
    /// `num(p) / den'(p)`; repeated ones are reported without a residue.
    pub fn residues_at_imag_poles(&self) -> Result<Vec<ImagPoleResidue>> {
        let deriv = self.den.derivative();
        let mut out = Vec::new();
        for c in self.pole_clusters()? {
            if !c.is_imaginary() {
                continue;
            }
            // snap to the axis: the off-axis part is rounding noise by definition
            let pole = Complex64::new(0.0, c.value.im);
            let residue = (c.multiplicity == 1)
                .then(|| self.num.eval_complex(pole) / deriv.eval_complex(pole));
            out.push(ImagPoleResidue {
                pole,
                multiplicity: c.multiplicity,
                residue,
            });
        }
        Ok(out)
    }

    pub fn mul(&self, rhs: &RationalTf) -> RationalTf {
        Self::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("product of valid tfs")
    }

    pub fn add(&self, rhs: &RationalTf) -> RationalTf {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        Self::new(num, &self.den * &rhs.den).expect("sum of valid tfs")
    }

    pub fn scale(&self, k: f64) -> RationalTf {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<RationalTf> {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// Rebuild the denominator with every right-half-plane pole mirrored into
    /// the left half plane (`p -> -conj(p)`). Magnitude response is unchanged.
    pub fn reflect_unstable_poles(&self) -> Result<RationalTf> {
        let poles = self.poles()?;
        let reflected: Vec<Complex64> = poles
            .iter()
            .map(|p| if p.re > 0.0 { -p.conj() } else { *p })
            .collect();
        let den = Polynomial::from_roots(&reflected);
        // keep the high-frequency gain: both denominators are monic
        Self::new(self.num.clone(), den)
    }
}

impl fmt::Debug for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalTf({:?} / {:?})", self.num.coeffs(), self.den.coeffs())
    }
}

impl fmt::Display for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_response() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap();
        let h = tf.eval(1.0).unwrap();
        assert!((h - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn lowpass_cutoff_magnitude() {
        let q = RationalTf::first_order_lowpass(20.0).unwrap();
        let h = q.eval(20.0).unwrap();
        assert!((h.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalization_is_monic_and_cancels_origin() {
        // 2s(s+1) / (4 s^2 (s+3)) -> 0.5 (s+1) / (s (s+3))
        let tf = RationalTf::from_coeffs(&[2.0, 2.0, 0.0], &[4.0, 12.0, 0.0, 0.0]).unwrap();
        assert_eq!(tf.den().coeffs(), &[1.0, 3.0, 0.0]);
        assert_eq!(tf.num().coeffs(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            RationalTf::from_coeffs(&[1.0], &[0.0]).unwrap_err(),
            Error::ZeroDenominator
        );
    }

    #[test]
    fn pole_on_axis_reported() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0, 4.0]).unwrap();
        assert!(matches!(tf.eval(2.0), Err(Error::PoleOnAxis { .. })));
    }

    #[test]
    fn residue_of_integrator() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap();
        let r = tf.residues_at_imag_poles().unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].residue, Some(Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn triple_origin_pole_flagged() {
        let tf = RationalTf::from_coeffs(&[1.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let clusters = tf.pole_clusters().unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].multiplicity, 3);
        let r = tf.residues_at_imag_poles().unwrap();
        assert!(!r[0].is_simple());
        assert!(r[0].residue.is_none());
    }

    #[test]
    fn reflection_preserves_magnitude() {
        let tf = RationalTf::from_coeffs(&[1.0, 2.0], &[1.0, -1.0, 4.0]).unwrap();
        let st = tf.reflect_unstable_poles().unwrap();
        for p in st.poles().unwrap() {
            assert!(p.re < 0.0);
        }
        for w in [0.1, 1.0, 3.0, 10.0] {
            let a = tf.eval(w).unwrap().norm();
            let b = st.eval(w).unwrap().norm();
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn algebra() {
        let a = RationalTf::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let b = RationalTf::from_coeffs(&[2.0], &[1.0, 2.0]).unwrap();
        let w = 0.7;
        let s = a.add(&b).eval(w).unwrap();
        let p = a.mul(&b).eval(w).unwrap();
        let (ha, hb) = (a.eval(w).unwrap(), b.eval(w).unwrap());
        assert!((s - (ha + hb)).norm() < 1e-14);
        assert!((p - ha * hb).norm() < 1e-14);
        assert_eq!(a.dc_gain(), Some(1.0));
    }
}
