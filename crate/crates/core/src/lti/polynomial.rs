use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual accepted for a polynomial root:
/// `|p(r)| <= ROOT_RESIDUAL_TOL * sum_i |c_i| |r|^i`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

/// Real-coefficient polynomial in the Laplace variable, coefficients stored in
/// descending degree order. Leading zeros are trimmed on construction, so the
/// leading coefficient is nonzero unless the polynomial is identically zero
/// (stored as `[0.0]`).
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs: Vec<f64> = coeffs.into();
        let first = coeffs.iter().position(|&c| c != 0.0);
        match first {
            Some(i) => {
                coeffs.drain(..i);
            }
            None => coeffs = vec![0.0],
        }
        Self { coeffs }
    }

    /// Build from coefficients in ascending degree order.
    pub fn from_ascending(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().rev().copied().collect::<Vec<_>>())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c * s^power`
    pub fn monomial(c: f64, power: usize) -> Self {
        let mut coeffs = vec![0.0; power + 1];
        coeffs[0] = c;
        Self::new(coeffs)
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs; imaginary residue from rounding is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^power` (zero past the degree).
    pub fn coeff(&self, power: usize) -> f64 {
        let n = self.degree();
        if power > n {
            0.0
        } else {
            self.coeffs[n - power]
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `sum_i |c_i| |z|^i`, the scale against which evaluation residuals are judged.
    pub fn abs_eval(&self, magnitude: f64) -> f64 {
        self.coeffs
            .iter()
            .fold(0.0, |acc, &c| acc * magnitude + c.abs())
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (n - i) as f64)
                .collect::<Vec<_>>(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    /// Multiplicity of the root at the origin (number of exactly-zero trailing coefficients).
    pub fn origin_multiplicity(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        self.coeffs.iter().rev().take_while(|&&c| c == 0.0).count()
    }

    /// Divide by `s^k`. Only exact trailing zeros are removed.
    pub fn deflate_origin(&self, k: usize) -> Self {
        let k = k.min(self.origin_multiplicity());
        Self::new(self.coeffs[..self.coeffs.len() - k].to_vec())
    }

    /// Substitute `s -> alpha * p`, returning the polynomial in `p`.
    pub fn rescale_variable(&self, alpha: f64) -> Self {
        let n = self.degree();
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * alpha.powi((n - i) as i32))
                .collect::<Vec<_>>(),
        )
    }

    /// Rough magnitude of the roots, used to balance coefficients before
    /// eigen-solves and Routh tests. Fujiwara-type bound on the monic form.
    pub fn root_scale(&self) -> f64 {
        let n = self.degree();
        if n == 0 {
            return 1.0;
        }
        let lead = self.leading();
        let mut scale: f64 = 0.0;
        for i in 1..=n {
            let c = (self.coeffs[i] / lead).abs();
            if c > 0.0 {
                scale = scale.max(c.powf(1.0 / i as f64));
            }
        }
        if scale > 0.0 && scale.is_finite() {
            scale
        } else {
            1.0
        }
    }

    /// All roots with multiplicity. Roots at the origin are extracted exactly;
    /// the rest come from the eigenvalues of a balanced companion matrix,
    /// polished with a few Newton steps. Every root is checked against
    /// [`ROOT_RESIDUAL_TOL`].
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if !self.is_finite() {
            return Err(Error::MalformedPolynomial("non-finite coefficient".into()));
        }
        if self.is_zero() {
            return Err(Error::MalformedPolynomial(
                "the zero polynomial has no isolated roots".into(),
            ));
        }
        let origin = self.origin_multiplicity();
        let mut roots = vec![Complex64::new(0.0, 0.0); origin];
        let core = self.deflate_origin(origin);
        let n = core.degree();
        if n == 0 {
            return Ok(roots);
        }

        let alpha = core.root_scale();
        let scaled = core.rescale_variable(alpha);
        let lead = scaled.leading();
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            companion[(0, j)] = -scaled.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        let eig = companion.complex_eigenvalues();

        let deriv = core.derivative();
        for k in 0..n {
            let mut r = eig[k] * alpha;
            r = polish(&core, &deriv, r);
            let resid = core.eval_complex(r).norm();
            let scale = core.abs_eval(r.norm());
            if !(resid <= ROOT_RESIDUAL_TOL * scale) {
                return Err(Error::RootSolve(format!(
                    "root {r} of {self} has relative residual {:.3e}",
                    resid / scale
                )));
            }
            roots.push(r);
        }
        Ok(roots)
    }
}

fn polish(p: &Polynomial, dp: &Polynomial, mut r: Complex64) -> Complex64 {
    let mut best = p.eval_complex(r).norm();
    for _ in 0..4 {
        let d = dp.eval_complex(r);
        if d.norm() == 0.0 {
            break;
        }
        let candidate = r - p.eval_complex(r) / d;
        let val = p.eval_complex(candidate).norm();
        if !(val < best) {
            break;
        }
        best = val;
        r = candidate;
    }
    r
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({:?})", self.coeffs)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && !(n == 0) {
                continue;
            }
            let p = n - i;
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match p {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a} s")?,
                _ => write!(f, "{a} s^{p}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn add_coeffs(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &c) in a.iter().enumerate() {
        out[n - a.len() + i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[n - b.len() + i] += sign * c;
    }
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, 1.0))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(add_coeffs(&self.coeffs, &rhs.coeffs, -1.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
