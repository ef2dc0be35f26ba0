//! Polynomial and rational transfer-function arithmetic, stability tests and
//! discretization.

mod discrete;
mod polynomial;
mod rational;
mod routh;

pub use discrete::{discretize_tustin, DiscreteFilter, DiscreteTf, DEFAULT_DT};
pub use polynomial::{Polynomial, ROOT_RESIDUAL_TOL};
pub use rational::{
    cluster_roots, on_axis, ImagPoleResidue, PoleCluster, RationalTf, AXIS_TOL, CLUSTER_TOL,
};
pub use routh::{routh_hurwitz, RouthCondition, RouthResult, Stability};

use crate::error::{Error, Result};

/// Strictly increasing, positive angular frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidGrid("empty".into()));
        }
        if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGrid("frequencies must be positive and finite".into()));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("frequencies must be strictly increasing".into()));
        }
        Ok(Self { omegas })
    }

    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(Error::InvalidGrid(format!(
                "log_space needs 0 < lo < hi and n >= 2 (got {lo}, {hi}, {n})"
            )));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut omegas: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        omegas[0] = lo;
        omegas[n - 1] = hi;
        Self::new(omegas)
    }

    /// Log spacing with a fixed density in points per decade.
    pub fn per_decade(lo: f64, hi: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidGrid(format!("need 0 < lo < hi (got {lo}, {hi})")));
        }
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).round() as usize + 1;
        Self::log_space(lo, hi, n.max(2))
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.omegas[0]
    }

    pub fn last(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }
}
