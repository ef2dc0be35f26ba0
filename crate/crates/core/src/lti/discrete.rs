//! Bilinear (Tustin) discretization and the resulting recurrences.

use num_complex::Complex64;

use super::polynomial::Polynomial;
use super::rational::RationalTf;
use crate::error::{Error, Result};

/// Default controller period: a 2 kHz loop.
pub const DEFAULT_DT: f64 = 1.0 / 2000.0;

/// Discrete transfer function in powers of `z^-1`:
/// `y[k] = sum_i b[i] u[k-i] - sum_{i>=1} a[i] y[k-i]`, with `a[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTf {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub dt: f64,
}

/// Tustin map `s = (2/dt) (z-1)/(z+1)`, no pre-warping.
pub fn discretize_tustin(tf: &RationalTf, dt: f64) -> Result<DiscreteTf> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "must be positive and finite"));
    }
    if !tf.is_proper() {
        return Err(Error::Improper {
            num: tf.num().degree(),
            den: tf.den().degree(),
        });
    }
    let n = tf.den().degree();
    let k = 2.0 / dt;
    let zm1 = Polynomial::new(vec![1.0, -1.0]);
    let zp1 = Polynomial::new(vec![1.0, 1.0]);
    let pow = |p: &Polynomial, e: usize| {
        (0..e).fold(Polynomial::constant(1.0), |acc, _| &acc * p)
    };
    let map = |p: &Polynomial| {
        let mut acc = Polynomial::zero();
        for i in 0..=p.degree() {
            let c = p.coeff(i);
            if c == 0.0 {
                continue;
            }
            let term = (&pow(&zm1, i) * &pow(&zp1, n - i)).scale(c * k.powi(i as i32));
            acc = &acc + &term;
        }
        acc
    };
    let nz = map(tf.num());
    let dz = map(tf.den());
    // pad to n+1 coefficients (descending in z == ascending in z^-1)
    let pad = |p: &Polynomial| {
        let mut v = vec![0.0; n + 1 - p.coeffs().len()];
        v.extend_from_slice(p.coeffs());
        v
    };
    let mut b = pad(&nz);
    let mut a = pad(&dz);
    let a0 = a[0];
    if a0 == 0.0 {
        return Err(Error::MalformedPolynomial(
            "Tustin map produced a zero leading denominator coefficient (pole at s = 2/dt)".into(),
        ));
    }
    b.iter_mut().for_each(|x| *x /= a0);
    a.iter_mut().for_each(|x| *x /= a0);
    Ok(DiscreteTf { b, a, dt })
}

impl DiscreteTf {
    pub fn passthrough(dt: f64) -> Self {
        Self {
            b: vec![1.0],
            a: vec![1.0],
            dt,
        }
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// `H(e^{j omega dt})`.
    pub fn freq_response(&self, omega: f64) -> Complex64 {
        let zinv = Complex64::from_polar(1.0, -omega * self.dt);
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &x| acc * zinv + x)
        };
        eval(&self.b) / eval(&self.a)
    }

    pub fn filter(&self) -> DiscreteFilter {
        DiscreteFilter::new(self.clone())
    }
}

/// Running state of a [`DiscreteTf`] (transposed direct form II).
#[derive(Debug, Clone)]
pub struct DiscreteFilter {
    tf: DiscreteTf,
    state: Vec<f64>,
}

impl DiscreteFilter {
    pub fn new(tf: DiscreteTf) -> Self {
        let order = tf.a.len().max(tf.b.len()) - 1;
        Self {
            tf,
            state: vec![0.0; order],
        }
    }

    pub fn step(&mut self, u: f64) -> f64 {
        let b = |i: usize| *self.tf.b.get(i).unwrap_or(&0.0);
        let a = |i: usize| *self.tf.a.get(i).unwrap_or(&0.0);
        let y = b(0) * u + self.state.first().copied().unwrap_or(0.0);
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = next + b(i + 1) * u - a(i + 1) * y;
        }
        y
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    pub fn tf(&self) -> &DiscreteTf {
        &self.tf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unity_is_passthrough() {
        let d = discretize_tustin(&RationalTf::constant(1.0), DEFAULT_DT).unwrap();
        assert_eq!(d.b, vec![1.0]);
        assert_eq!(d.a, vec![1.0]);
        let mut f = d.filter();
        for u in [0.3, -1.0, 7.0] {
            assert_eq!(f.step(u), u);
        }
    }

    #[test]
    fn lowpass_dc_gain_is_one() {
        let q = RationalTf::first_order_lowpass(20.0).unwrap();
        let d = discretize_tustin(&q, DEFAULT_DT).unwrap();
        assert!((d.dc_gain() - 1.0).abs() < 1e-12);
        let mut f = d.filter();
        let mut y = 0.0;
        for _ in 0..20_000 {
            y = f.step(1.0);
        }
        assert!((y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrator_is_trapezoidal() {
        let lambda = 20.0;
        let tf = RationalTf::from_coeffs(&[lambda], &[1.0, 0.0]).unwrap();
        let d = discretize_tustin(&tf, DEFAULT_DT).unwrap();
        let h = lambda * DEFAULT_DT / 2.0;
        assert!((d.b[0] - h).abs() < 1e-15 && (d.b[1] - h).abs() < 1e-15);
        assert_eq!(d.a, vec![1.0, -1.0]);
        // frequency response at 1 rad/s against lambda / (j omega)
        let hd = d.freq_response(1.0);
        let hc = tf.eval(1.0).unwrap();
        assert!((hd - hc).norm() / hc.norm() < 1e-3);
    }

    #[test]
    fn improper_rejected() {
        let tf = RationalTf::from_coeffs(&[1.0, 0.0], &[1.0]).unwrap();
        assert!(matches!(
            discretize_tustin(&tf, DEFAULT_DT),
            Err(Error::Improper { .. })
        ));
    }

    #[test]
    fn magnitude_tracks_continuous_below_tenth_nyquist() {
        let tf = RationalTf::from_coeffs(&[3.0, 50.0], &[1.0, 8.0, 400.0]).unwrap();
        let d = discretize_tustin(&tf, DEFAULT_DT).unwrap();
        let nyq = std::f64::consts::PI / DEFAULT_DT;
        for i in 1..200 {
            let w = 0.1 * nyq * i as f64 / 200.0;
            let hc = tf.eval(w).unwrap().norm();
            let hd = d.freq_response(w).norm();
            assert!((hd - hc).abs() / hc < 0.01, "omega {w}");
        }
    }
}
