//! Force-displacement work loops from quasi-static backdrive experiments.

use crate::control::ControllerConfig;
use crate::error::{Error, Result};
use crate::plant::{simulate, DahlParams, Excitation, PlantParams, SimOptions, SimTrace};
use crate::signal::Sinusoid;

/// `(x_e, force)` points of one half cycle.
pub type Branch = Vec<(f64, f64)>;

/// Force column plotted against endpoint position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopForce {
    /// Endpoint force `F_e`.
    External,
    /// Transmission force `F_p`.
    Internal,
}

/// One closed force-displacement cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkLoop {
    pub x_e: Vec<f64>,
    pub force: Vec<f64>,
    /// `closed integral F dx_e`, J; positive when the force source does net work.
    pub area: f64,
    /// Half the force spread between the branches at `x_e = 0`, Nm.
    pub amplitude: f64,
}

/// Relative closure tolerance of an extracted cycle.
pub const CLOSURE_TOL: f64 = 0.01;

fn interp(branch: &[(f64, f64)], x: f64) -> Option<f64> {
    let i = branch.partition_point(|p| p.0 < x);
    if i == 0 || i == branch.len() {
        return branch.iter().find(|p| p.0 == x).map(|p| p.1);
    }
    let (a, b) = (branch[i - 1], branch[i]);
    if b.0 == a.0 {
        return Some(a.1);
    }
    Some(a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0))
}

impl WorkLoop {
    /// Last full cycle of `(x, f)`, delimited by the last two upward zero
    /// crossings of `x`.
    pub fn from_samples(x: &[f64], f: &[f64]) -> Result<Self> {
        if x.len() != f.len() {
            return Err(Error::WorkLoop("position and force lengths differ".into()));
        }
        let ups: Vec<usize> = (1..x.len()).filter(|&i| x[i - 1] < 0.0 && x[i] >= 0.0).collect();
        if ups.len() < 2 {
            return Err(Error::WorkLoop("no complete cycle found".into()));
        }
        let (a, b) = (ups[ups.len() - 2], ups[ups.len() - 1]);
        Self::from_cycle(x[a..=b].to_vec(), f[a..=b].to_vec())
    }

    /// Build from samples covering exactly one cycle.
    pub fn from_cycle(x_e: Vec<f64>, force: Vec<f64>) -> Result<Self> {
        if x_e.len() < 8 {
            return Err(Error::WorkLoop("cycle has too few samples".into()));
        }
        let (fmin, fmax) = force.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let range = fmax - fmin;
        let gap = (force[force.len() - 1] - force[0]).abs();
        if gap > CLOSURE_TOL * range.max(f64::MIN_POSITIVE) {
            return Err(Error::WorkLoop(format!(
                "cycle does not close: end gap {gap:.3e} Nm over a {range:.3e} Nm range"
            )));
        }
        let area = x_e
            .windows(2)
            .zip(force.windows(2))
            .map(|(x, f)| 0.5 * (f[0] + f[1]) * (x[1] - x[0]))
            .sum();
        let mut lp = Self { x_e, force, area, amplitude: 0.0 };
        lp.amplitude = lp.amplitude_at(0.0).unwrap_or(f64::NAN);
        Ok(lp)
    }

    /// `(rising, falling)` branches, each sorted by increasing position.
    pub fn branches(&self) -> (Branch, Branch) {
        let mut rising = Vec::new();
        let mut falling = Vec::new();
        for i in 0..self.x_e.len() {
            let dx = if i + 1 < self.x_e.len() {
                self.x_e[i + 1] - self.x_e[i]
            } else {
                self.x_e[i] - self.x_e[i - 1]
            };
            let p = (self.x_e[i], self.force[i]);
            if dx > 0.0 {
                rising.push(p);
            } else if dx < 0.0 {
                falling.push(p);
            }
        }
        rising.sort_by(|a, b| a.0.total_cmp(&b.0));
        falling.sort_by(|a, b| a.0.total_cmp(&b.0));
        (rising, falling)
    }

    /// Half the rising-minus-falling force difference at position `x`.
    pub fn amplitude_at(&self, x: f64) -> Option<f64> {
        let (r, f) = self.branches();
        Some(0.5 * (interp(&r, x)? - interp(&f, x)?))
    }

    /// Largest half-spread `|F_rising - F_falling| / 2` over `[lo, hi]`.
    pub fn amplitude_over(&self, lo: f64, hi: f64) -> Result<f64> {
        let (r, f) = self.branches();
        let mut best: Option<f64> = None;
        let n = 400;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            if let (Some(a), Some(b)) = (interp(&r, x), interp(&f, x)) {
                let s = 0.5 * (a - b).abs();
                best = Some(best.map_or(s, |m: f64| m.max(s)));
            }
        }
        best.ok_or_else(|| Error::WorkLoop(format!("loop does not cover [{lo}, {hi}]")))
    }

    pub fn position_range(&self) -> (f64, f64) {
        self.x_e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    pub fn force_range(&self) -> (f64, f64) {
        self.force.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }
}

/// Last full cycle of a trace, force column against `x_e`.
pub fn work_loop(trace: &SimTrace, force: LoopForce) -> Result<WorkLoop> {
    let col = match force {
        LoopForce::External => &trace.f_e,
        LoopForce::Internal => &trace.f_p,
    };
    WorkLoop::from_samples(&trace.x_e, col)
}

/// Endpoint driven through `x_e = amplitude sin(omega t)` for `cycles` periods.
pub fn backdrive(
    params: &PlantParams,
    controller: &ControllerConfig,
    amplitude: f64,
    omega: f64,
    cycles: usize,
    dt: f64,
) -> Result<SimTrace> {
    if !(amplitude > 0.0 && omega > 0.0) {
        return Err(Error::param("amplitude, omega", "must be > 0"));
    }
    let period = 2.0 * std::f64::consts::PI / omega;
    let ex = Excitation::position(Sinusoid::new(amplitude, omega));
    simulate(params, controller, &ex, &SimOptions::new(dt, period * cycles as f64 + dt))
}

/// Loop of a lone Dahl element driven through `x = amplitude sin(theta)`,
/// integrated with the exact displacement update; the last of `cycles` cycles.
pub fn synthesize_dahl_loop(
    dahl: &DahlParams,
    amplitude: f64,
    samples_per_cycle: usize,
    cycles: usize,
) -> Result<WorkLoop> {
    if samples_per_cycle < 8 || cycles == 0 {
        return Err(Error::param("samples_per_cycle", "need >= 8 samples and >= 1 cycle"));
    }
    let n = samples_per_cycle;
    let pos = |i: usize| amplitude * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin();
    let mut f = 0.0;
    let mut x_prev = 0.0;
    let (mut xs, mut fs) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
    for i in 0..=(n * cycles) {
        let x = pos(i % n);
        f = dahl.advance(f, x - x_prev);
        x_prev = x;
        if i >= n * (cycles - 1) {
            xs.push(x);
            fs.push(f);
        }
    }
    WorkLoop::from_cycle(xs, fs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spring_loop_has_no_area() {
        let n = 1000;
        let x: Vec<f64> = (0..=n).map(|i| 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        let f: Vec<f64> = x.iter().map(|v| 0.3 * v).collect();
        let lp = WorkLoop::from_cycle(x, f).unwrap();
        assert!(lp.area.abs() < 1e-12);
        assert!(lp.amplitude.abs() < 1e-12);
    }

    #[test]
    fn coulomb_loop_area() {
        // F = c sgn(dx): area 4 c A, amplitude c
        let n = 4000;
        let (a, c) = (0.5, 0.02);
        let x: Vec<f64> = (0..=n).map(|i| a * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        let f: Vec<f64> = (0..=n)
            .map(|i| {
                let ph = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                if ph.cos() >= 0.0 { c } else { -c }
            })
            .collect();
        let lp = WorkLoop::from_cycle(x, f).unwrap();
        assert!((lp.area - 4.0 * c * a).abs() / (4.0 * c * a) < 1e-2);
        assert!((lp.amplitude - c).abs() < 1e-9);
    }

    #[test]
    fn needs_a_full_cycle() {
        let x = vec![-1.0, 0.5, 1.0, 0.2];
        let f = vec![0.0; 4];
        assert!(matches!(WorkLoop::from_samples(&x, &f), Err(Error::WorkLoop(_))));
    }

    #[test]
    fn large_dahl_loop_saturates() {
        let d = PlantParams::identified().dahl();
        // A = 20 F_c / sigma
        let lp = synthesize_dahl_loop(&d, 20.0 * d.f_c / d.sigma, 20_000, 3).unwrap();
        assert!((lp.amplitude - d.f_c).abs() / d.f_c < 0.02, "{}", lp.amplitude);
        assert!(lp.area > 0.0);
    }
}
