//! Linear network of the actuator with a linear control law, solved exactly
//! with polynomial arithmetic.
//!
//! Unknowns `(X, X_e, F_p)`, input `F_e`, with `M = m s^2 + b s + k`,
//! `E = m_e s^2 + b_e s + k_e`, `L = b_s s + k_s`:
//!
//! ```text
//! M X - F_p - F_a = 0
//! E X_e + F_p     = F_e
//! L X - L X_e + F_p = 0
//! F_a = A(s) F_p + B(s) X + C(s) F_e
//! ```

use crate::control::{ControllerConfig, DobConfig, FeedforwardConfig, ForceSource, PdConfig};
use crate::error::{Error, Result};
use crate::lti::{Polynomial, RationalTf};
use crate::plant::PlantParams;

/// `F_a = A F_p + B X + C F_e`, the continuous-time equivalent of a linear controller.
#[derive(Debug, Clone)]
pub struct LinearLaw {
    pub a: RationalTf,
    pub b: RationalTf,
    pub c: RationalTf,
}

impl LinearLaw {
    pub fn none() -> Self {
        Self { a: RationalTf::constant(0.0), b: RationalTf::constant(0.0), c: RationalTf::constant(0.0) }
    }

    pub fn proportional(gain: f64, source: ForceSource) -> Self {
        let k = RationalTf::constant(gain);
        match source {
            ForceSource::Internal => Self { a: k, ..Self::none() },
            ForceSource::External => Self { c: k, ..Self::none() },
        }
    }

    pub fn pd(cfg: &PdConfig) -> Self {
        let b = RationalTf::new(Polynomial::new(vec![-cfg.k_d, -cfg.k_p]), Polynomial::constant(1.0))
            .expect("constant denominator");
        Self { b, ..Self::none() }
    }

    pub fn dob(cfg: &DobConfig) -> Result<Self> {
        cfg.validate()?;
        let l = cfg.lambda;
        let a = RationalTf::from_coeffs(&[l], &[1.0, 0.0])?;
        let b = RationalTf::from_coeffs(&[-l * cfg.m_n, -l * cfg.b_n, -l * cfg.k_n], &[1.0, 0.0])?;
        Ok(Self { a, b, c: RationalTf::constant(0.0) })
    }

    /// DOB with the linear part of the feedforward; the hysteresis estimate is dropped.
    pub fn composite(dob: &DobConfig, ff: &FeedforwardConfig) -> Result<Self> {
        ff.validate()?;
        let base = Self::dob(dob)?;
        // reference path 1 + lambda/s
        let g = RationalTf::from_coeffs(&[1.0, dob.lambda], &[1.0, 0.0])?;
        let endpoint = RationalTf::from_coeffs(&[ff.b_e, ff.k_e], &[1.0])?;
        let line = RationalTf::from_coeffs(&[ff.b_e, ff.k_e], &[ff.b_s, ff.k_s])?;
        Ok(Self {
            a: base.a.add(&g.mul(&line)),
            b: base.b.add(&g.mul(&endpoint)),
            c: base.c,
        })
    }

    pub fn from_config(cfg: &ControllerConfig) -> Result<Self> {
        match cfg {
            ControllerConfig::None => Ok(Self::none()),
            ControllerConfig::ProportionalFf { gain, source } => Ok(Self::proportional(*gain, *source)),
            ControllerConfig::Dob(d) => Self::dob(d),
            ControllerConfig::Pd(p) => Ok(Self::pd(p)),
            ControllerConfig::Composite { dob, feedforward } => Self::composite(dob, feedforward),
        }
    }
}

type PolyMatrix = [[Polynomial; 3]; 3];

fn det3(m: &PolyMatrix) -> Polynomial {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| {
        &(&m[r1][c1] * &m[r2][c2]) - &(&m[r1][c2] * &m[r2][c1])
    };
    let t0 = &m[0][0] * &minor(1, 2, 1, 2);
    let t1 = &m[0][1] * &minor(1, 2, 0, 2);
    let t2 = &m[0][2] * &minor(1, 2, 0, 1);
    &(&t0 - &t1) + &t2
}

/// `(det A, det A_xe)`: `X_e / F_e = det A_xe / det A` by Cramer's rule.
fn solve(params: &PlantParams, law: &LinearLaw) -> Result<(Polynomial, Polynomial)> {
    params.validate()?;
    let p = params;
    let motor = Polynomial::new(vec![p.m, p.b, p.k]);
    let endpoint = Polynomial::new(vec![p.m_e, p.b_e, p.k_e]);
    let line = Polynomial::new(vec![p.b_s, p.k_s]);
    let one = Polynomial::constant(1.0);
    let zero = Polynomial::zero();

    // clear the controller denominators from the motor row
    let (ad, bd, cd) = (law.a.den(), law.b.den(), law.c.den());
    let d = &(ad * bd) * cd;
    let a_n = &(law.a.num() * bd) * cd;
    let b_n = &(law.b.num() * ad) * cd;
    let c_n = &(law.c.num() * ad) * bd;

    let row0 = [&(&motor * &d) - &b_n, zero.clone(), -&(&d + &a_n)];
    let rhs = [c_n, one.clone(), zero.clone()];
    let mat: PolyMatrix = [
        row0.clone(),
        [zero.clone(), endpoint.clone(), one.clone()],
        [line.clone(), -&line, one.clone()],
    ];
    let det = det3(&mat);
    if det.is_zero() {
        return Err(Error::MalformedPolynomial("singular network".into()));
    }
    let mut mat_xe = mat.clone();
    for (r, v) in rhs.into_iter().enumerate() {
        mat_xe[r][1] = v;
    }
    Ok((det, det3(&mat_xe)))
}

/// Endpoint impedance `F_e / V_e` of the plant under `law` (hysteresis ignored).
pub fn network_impedance(params: &PlantParams, law: &LinearLaw) -> Result<RationalTf> {
    let (det, det_xe) = solve(params, law)?;
    let s = Polynomial::monomial(1.0, 1);
    RationalTf::new(det, &s * &det_xe)
}

/// Endpoint compliance `X_e / F_e` under `law`.
pub fn endpoint_compliance(params: &PlantParams, law: &LinearLaw) -> Result<RationalTf> {
    let (det, det_xe) = solve(params, law)?;
    RationalTf::new(det_xe, det)
}

/// Endpoint impedance with proportional force feedback `F_a = K_f F`,
/// `F` the internal or the external force.
pub fn endpoint_impedance_ff(params: &PlantParams, k_f: f64, source: ForceSource) -> Result<RationalTf> {
    if !k_f.is_finite() {
        return Err(Error::param("k_f", "must be finite"));
    }
    network_impedance(params, &LinearLaw::proportional(k_f, source))
}

/// Low-frequency endpoint stiffness `lim s Z(s)` with internal force feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowFreqLimits {
    /// `k_e + k k_s / (k + (1 + K_f) k_s)`
    pub general: f64,
    /// Stiff, non-backdrivable motor (`k >> k_s`): `k_s + k_e`.
    pub nonbackdrivable: f64,
    /// Stiff line (`k_s >> k`): `k / (1 + K_f) + k_e`.
    pub backdrivable: f64,
}

pub fn low_freq_limits(params: &PlantParams, k_f: f64) -> Result<LowFreqLimits> {
    params.validate()?;
    let p = params;
    let g = 1.0 + k_f;
    let den = p.k + g * p.k_s;
    if den == 0.0 || g == 0.0 {
        return Err(Error::param("k_f", "makes the low-frequency network singular"));
    }
    Ok(LowFreqLimits {
        general: p.k_e + p.k * p.k_s / den,
        nonbackdrivable: p.k_s + p.k_e,
        backdrivable: p.k / g + p.k_e,
    })
}
