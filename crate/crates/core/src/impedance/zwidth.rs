//! Z-width: the range between the lowest and highest endpoint impedance the
//! actuator can render, and the maximum-stiffness PD gain rule.

use nalgebra::{DMatrix, Matrix4, Vector4};

use super::{measure_impedance, ImpedanceOptions, Port};
use crate::control::{ControllerConfig, DobConfig, FeedforwardConfig, PdConfig, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::lti::FrequencyGrid;
use crate::plant::{rk4, PlantParams, PlantState};
use crate::sysid::FrequencyResponse;

/// Pointwise impedance range in dB re 1 Nm s/rad.
#[derive(Debug, Clone, PartialEq)]
pub struct ZWidthCurve {
    pub grid: FrequencyGrid,
    pub zmin_db: Vec<f64>,
    pub zmax_db: Vec<f64>,
    pub width_db: Vec<f64>,
    /// False where either input is invalid.
    pub valid: Vec<bool>,
}

impl ZWidthCurve {
    pub const HEADER: [&'static str; 4] = ["omega_rad_s", "zmin_db", "zmax_db", "width_db"];

    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.grid.len()).map(|i| [self.grid.omegas()[i], self.zmin_db[i], self.zmax_db[i], self.width_db[i]])
    }

    /// Width at the grid point nearest to `omega` (log distance), if valid.
    pub fn width_at(&self, omega: f64) -> Option<f64> {
        let i = nearest(&self.grid, omega);
        self.valid[i].then(|| self.width_db[i])
    }
}

fn nearest(grid: &FrequencyGrid, omega: f64) -> usize {
    let w = grid.omegas();
    (0..w.len())
        .min_by(|&a, &b| (w[a] / omega).ln().abs().total_cmp(&(w[b] / omega).ln().abs()))
        .unwrap_or(0)
}

/// `20 log10 |z_max| - 20 log10 |z_min|` on a shared grid.
pub fn zwidth(z_min: &FrequencyResponse, z_max: &FrequencyResponse) -> Result<ZWidthCurve> {
    if z_min.grid != z_max.grid {
        return Err(Error::InvalidGrid("Z-width inputs must share one frequency grid".into()));
    }
    let n = z_min.len();
    let mut curve = ZWidthCurve {
        grid: z_min.grid.clone(),
        zmin_db: Vec::with_capacity(n),
        zmax_db: Vec::with_capacity(n),
        width_db: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for i in 0..n {
        let ok = z_min.valid[i] && z_max.valid[i];
        let (lo, hi) = if ok { (z_min.mag_db(i), z_max.mag_db(i)) } else { (f64::NAN, f64::NAN) };
        curve.zmin_db.push(lo);
        curve.zmax_db.push(hi);
        curve.width_db.push(hi - lo);
        curve.valid.push(ok && (hi - lo).is_finite());
    }
    Ok(curve)
}

/// Gain sweep for the maximum-impedance PD controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdSweep {
    pub k_p_min: f64,
    pub k_p_max: f64,
    pub points: usize,
    /// `K_d = K_p / kd_ratio`.
    pub kd_ratio: f64,
    /// Samples between measurement and actuation.
    pub delay: usize,
    pub dt: f64,
}

impl Default for PdSweep {
    fn default() -> Self {
        Self { k_p_min: 0.1, k_p_max: 1e4, points: 401, kd_ratio: 50.0, delay: 1, dt: crate::lti::DEFAULT_DT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub k_p: f64,
    pub k_d: f64,
    /// Spectral radius of the sampled closed loop at these gains.
    pub radius: f64,
}

/// One RK4 step of the linear plant as `z' = Phi z + Gamma F_a`, `z = (x, v, x_e, v_e)`.
fn sampled_plant(params: &PlantParams, dt: f64) -> (Matrix4<f64>, Vector4<f64>) {
    let lin = params.linear();
    let to_vec = |s: PlantState| Vector4::new(s.x, s.v, s.x_e, s.v_e);
    let mut phi = Matrix4::zeros();
    for j in 0..4 {
        let mut e = [0.0; 4];
        e[j] = 1.0;
        let s = PlantState { x: e[0], v: e[1], x_e: e[2], v_e: e[3], f_d: 0.0 };
        phi.set_column(j, &to_vec(rk4(&s, &lin, 0.0, [0.0; 3], dt)));
    }
    let gamma = to_vec(rk4(&PlantState::default(), &lin, 1.0, [0.0; 3], dt));
    (phi, gamma)
}

/// Spectral radius of the sampled loop `F_a[k] = -(K_p x + K_d v)[k - delay]`.
pub fn pd_loop_radius(params: &PlantParams, k_p: f64, k_d: f64, delay: usize, dt: f64) -> Result<f64> {
    let (phi, gamma) = sampled_plant(params, dt);
    // state: plant, then the queue of commands not yet applied (oldest first)
    let n = 4 + delay;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..4 {
        for j in 0..4 {
            a[(i, j)] = phi[(i, j)];
        }
    }
    let gain = [-k_p, -k_d, 0.0, 0.0];
    if delay == 0 {
        for i in 0..4 {
            for j in 0..4 {
                a[(i, j)] += gamma[i] * gain[j];
            }
        }
    } else {
        for i in 0..4 {
            a[(i, 4)] = gamma[i];
        }
        for q in 0..delay - 1 {
            a[(4 + q, 5 + q)] = 1.0;
        }
        for j in 0..4 {
            a[(n - 1, j)] = gain[j];
        }
    }
    let eig = a.complex_eigenvalues();
    let r = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !r.is_finite() {
        return Err(Error::RootSolve("closed-loop eigenvalues are not finite".into()));
    }
    Ok(r)
}

/// Largest gain on a log grid whose sampled loop, and every smaller grid gain's,
/// has spectral radius below one.
pub fn max_stable_pd(params: &PlantParams, sweep: &PdSweep) -> Result<PdGains> {
    if !(sweep.k_p_min > 0.0 && sweep.k_p_max > sweep.k_p_min && sweep.points >= 2 && sweep.kd_ratio > 0.0) {
        return Err(Error::param("pd_sweep", "need 0 < k_p_min < k_p_max, >= 2 points and kd_ratio > 0"));
    }
    let grid = FrequencyGrid::log_space(sweep.k_p_min, sweep.k_p_max, sweep.points)?;
    let mut best = None;
    for &k_p in grid.omegas() {
        let k_d = k_p / sweep.kd_ratio;
        let radius = pd_loop_radius(params, k_p, k_d, sweep.delay, sweep.dt)?;
        if radius >= 1.0 {
            break;
        }
        best = Some(PdGains { k_p, k_d, radius });
    }
    best.ok_or_else(|| Error::param("pd_sweep", format!("closed loop is unstable already at K_p = {}", sweep.k_p_min)))
}

/// Controllers and measurement settings for a Z-width run.
#[derive(Debug, Clone, PartialEq)]
pub struct ZWidthSetup {
    pub grid: FrequencyGrid,
    pub impedance: ImpedanceOptions,
    pub sweep: PdSweep,
    /// DOB cutoff of the minimum-impedance controller, rad/s.
    pub lambda: f64,
    /// Also measure the maximum at the motor port.
    pub motor_port: bool,
}

impl ZWidthSetup {
    pub fn new(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            impedance: ImpedanceOptions::default(),
            sweep: PdSweep::default(),
            lambda: DEFAULT_LAMBDA,
            motor_port: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZWidthReport {
    pub gains: PdGains,
    pub z_min: FrequencyResponse,
    pub z_max: FrequencyResponse,
    pub curve: ZWidthCurve,
    /// `F_p / V` under the same PD controller, against the endpoint minimum.
    pub motor: Option<(FrequencyResponse, ZWidthCurve)>,
}

/// Minimum: DOB with `P_n = 1/(m s)` plus linear and Dahl feedforward.
pub fn min_impedance_controller(params: &PlantParams, lambda: f64) -> ControllerConfig {
    ControllerConfig::Composite {
        dob: DobConfig::frictionless(params, lambda),
        feedforward: FeedforwardConfig::from_params(params, !params.is_linear()),
    }
}

/// Maximum: PD position hold at the swept gains.
pub fn max_impedance_controller(gains: &PdGains) -> ControllerConfig {
    ControllerConfig::Pd(PdConfig { k_p: gains.k_p, k_d: gains.k_d, x_target: 0.0 })
}

pub fn zwidth_experiment(params: &PlantParams, setup: &ZWidthSetup) -> Result<ZWidthReport> {
    let gains = max_stable_pd(params, &setup.sweep)?;
    log::info!("max-impedance PD gains K_p = {:.4}, K_d = {:.4}", gains.k_p, gains.k_d);
    let z_min = measure_impedance(params, &min_impedance_controller(params, setup.lambda), &setup.grid, &setup.impedance)?;
    let hold = ImpedanceOptions { computation_delay: setup.sweep.delay, ..setup.impedance };
    let pd = max_impedance_controller(&gains);
    let z_max = measure_impedance(params, &pd, &setup.grid, &hold)?;
    let curve = zwidth(&z_min, &z_max)?;
    let motor = if setup.motor_port {
        let zm = measure_impedance(params, &pd, &setup.grid, &ImpedanceOptions { port: Port::Motor, ..hold })?;
        let c = zwidth(&z_min, &zm)?;
        Some((zm, c))
    } else {
        None
    };
    Ok(ZWidthReport { gains, z_min, z_max, curve, motor })
}
