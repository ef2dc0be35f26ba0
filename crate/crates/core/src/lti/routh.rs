//! Routh-Hurwitz stability classification.

use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Entries below this fraction of the local row scale count as zero.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// All roots in the open left half plane.
    Stable,
    /// Roots on the imaginary axis, none in the open right half plane.
    Marginal,
    /// At least one root in the open right half plane.
    Unstable,
}

/// The first condition that kept the polynomial from being strictly Hurwitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouthCondition {
    /// Coefficient of `s^power` has the opposite sign of the leading coefficient.
    CoefficientSign { power: usize },
    /// Sign changes in the first column of the array; `count` equals the
    /// number of open right-half-plane roots.
    FirstColumnSignChanges { count: usize },
    /// Row `row` vanished, so the polynomial has roots symmetric about the origin.
    ZeroRow { row: usize },
    /// First-column entry of row `row` vanished with the rest of the row nonzero.
    ZeroPivot { row: usize },
    /// Exact root(s) at the origin.
    RootAtOrigin { multiplicity: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouthResult {
    pub stability: Stability,
    pub first_failure: Option<RouthCondition>,
}

fn is_zero(x: f64, scale: f64) -> bool {
    x.abs() <= ZERO_TOL * scale
}

/// Classify `p` with the Routh array. Zero rows are replaced by the derivative
/// of the auxiliary polynomial; zero pivots use the epsilon substitution.
pub fn routh_hurwitz(p: &Polynomial) -> Result<RouthResult> {
    if !p.is_finite() {
        return Err(Error::MalformedPolynomial("non-finite coefficient".into()));
    }
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::MalformedPolynomial(
            "Routh test needs a polynomial of degree >= 1".into(),
        ));
    }

    let mut first_failure: Option<RouthCondition> = None;
    let mut marginal = false;

    let origin = p.origin_multiplicity();
    if origin > 0 {
        marginal = true;
        first_failure = Some(RouthCondition::RootAtOrigin {
            multiplicity: origin,
        });
    }
    let mut q = p.deflate_origin(origin);
    if q.leading() < 0.0 {
        q = q.scale(-1.0);
    }
    if q.degree() == 0 {
        return Ok(RouthResult {
            stability: Stability::Marginal,
            first_failure,
        });
    }
    // balance so that coefficient magnitudes are comparable across powers
    let q = q.rescale_variable(q.root_scale());
    let q = q.scale(1.0 / q.leading());
    let n = q.degree();
    let c = q.coeffs();
    let cmax = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    for (i, &ci) in c.iter().enumerate() {
        if ci < 0.0 && !is_zero(ci, cmax) {
            return Ok(RouthResult {
                stability: Stability::Unstable,
                first_failure: first_failure.or(Some(RouthCondition::CoefficientSign {
                    power: n - i,
                })),
            });
        }
    }

    let width = n / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|j| *c.get(2 * j).unwrap_or(&0.0)).collect();
    let mut cur: Vec<f64> = (0..width)
        .map(|j| *c.get(2 * j + 1).unwrap_or(&0.0))
        .collect();
    let mut first_col = vec![prev[0]];

    // row index r corresponds to power n - r
    for r in 1..=n {
        let scale = prev
            .iter()
            .chain(cur.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        if cur.iter().all(|&x| is_zero(x, scale)) {
            // auxiliary polynomial from the row above, order n - r + 1, even/odd powers
            let order = n - r + 1;
            marginal = true;
            first_failure.get_or_insert(RouthCondition::ZeroRow { row: r });
            for (j, slot) in cur.iter_mut().enumerate() {
                let power = order as i64 - 2 * j as i64;
                *slot = if power > 0 {
                    prev[j] * power as f64
                } else {
                    0.0
                };
            }
        } else if is_zero(cur[0], scale) {
            marginal = true;
            first_failure.get_or_insert(RouthCondition::ZeroPivot { row: r });
            cur[0] = 1e-9 * scale;
        }
        first_col.push(cur[0]);
        if r == n {
            break;
        }
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = *prev.get(j + 1).unwrap_or(&0.0);
                let b = *cur.get(j + 1).unwrap_or(&0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }

    let changes = first_col
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    if changes > 0 {
        return Ok(RouthResult {
            stability: Stability::Unstable,
            first_failure: Some(RouthCondition::FirstColumnSignChanges { count: changes }),
        });
    }
    Ok(RouthResult {
        stability: if marginal {
            Stability::Marginal
        } else {
            Stability::Stable
        },
        first_failure,
    })
}
