//! Execute one experiment and write its artifacts.

use std::fmt::Write as _;

use sea_core::control::ControllerConfig;
use sea_core::impedance::{
    backdrive, fit_dahl, measure_impedance, synthesize_dahl_loop, work_loop, zwidth_experiment, ImpedanceOptions,
    LoopForce, PdSweep, WorkLoop, ZWidthCurve, ZWidthSetup,
};
use sea_core::lti::FrequencyGrid;
use sea_core::passivity::{check_passive, default_grid, dob_admittance, network_impedance, nominal_bounds, LinearLaw, Nominal};
use sea_core::plant::{simulate, DahlParams, Excitation, SimOptions, SimTrace};
use sea_core::signal::{Signal, Sinusoid};
use sea_core::sysid::{chirp_experiment, default_grid as sysid_grid, identify, FrequencyResponse, IdentifyOptions};

use crate::artifacts::Artifacts;
use crate::config::{AnalysisKind, ExcitationSpec, ExperimentConfig};
use crate::error::CliError;
use crate::noise::NoiseSource;

/// Command-line values that replace the ones in the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(dt) = self.dt {
            cfg.run.dt = dt;
        }
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(lambda) = self.lambda {
            cfg.controller.set_lambda(lambda);
            cfg.analysis.lambda = lambda;
        }
        cfg.validate()
    }
}

fn grid(cfg: &ExperimentConfig) -> Result<FrequencyGrid, CliError> {
    let a = &cfg.analysis;
    FrequencyGrid::log_space(a.omega_min, a.omega_max, a.points).map_err(|e| CliError::from_core("analysis", e))
}

fn trace_rows(tr: &SimTrace, every: usize) -> impl Iterator<Item = [f64; 11]> + '_ {
    tr.rows().step_by(every)
}

fn response_csv(out: &mut Artifacts, name: &str, r: &FrequencyResponse) -> Result<(), CliError> {
    out.write_csv(name, &FrequencyResponse::HEADER, r.rows())
}

fn loop_csv(out: &mut Artifacts, name: &str, lp: &WorkLoop) -> Result<(), CliError> {
    out.write_csv(name, &["x_e", "force"], lp.x_e.iter().zip(&lp.force).map(|(x, f)| [*x, *f]))
}

fn curve_csv(out: &mut Artifacts, name: &str, c: &ZWidthCurve) -> Result<(), CliError> {
    out.write_csv(name, &ZWidthCurve::HEADER, c.rows())
}

/// Run `cfg`, naming every file `{prefix}{file}`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &mut Artifacts, prefix: &str) -> Result<(), CliError> {
    cfg.validate()?;
    let file = |n: &str| format!("{prefix}{n}");
    out.write_text(&file("config.ini"), &cfg.to_ini_string())?;
    let plant = cfg.plant;
    let ctrl = cfg.controller.resolve(&plant);
    let dt = cfg.run.dt;
    let a = cfg.analysis;
    log::info!("{}: {} with controller {}", cfg.name, a.kind.as_str(), ctrl.name());

    match a.kind {
        AnalysisKind::Simulate => {
            let f_e = match cfg.excitation {
                ExcitationSpec::None => Signal::Zero,
                ExcitationSpec::Chirp(c) => Signal::Chirp(c),
                ExcitationSpec::Sine { amplitude, omega } => Signal::Sine(Sinusoid::new(amplitude, omega)),
                ExcitationSpec::Constant(v) => Signal::Constant(v),
            };
            let tr = simulate(&plant, &ctrl, &Excitation::force(f_e), &SimOptions::new(dt, cfg.run.duration))?;
            out.write_csv(&file("trace.csv"), &SimTrace::HEADER, trace_rows(&tr, a.decimate))?;
        }

        AnalysisKind::Sysid => {
            let ExcitationSpec::Chirp(chirp) = cfg.excitation else { unreachable!("checked by validate") };
            let mut tr = chirp_experiment(&plant, &chirp, dt)?;
            if a.noise_std > 0.0 {
                let mut noise = NoiseSource::new(cfg.run.seed);
                for col in [&mut tr.x, &mut tr.x_e, &mut tr.f_p, &mut tr.f_e] {
                    noise.perturb(col, a.noise_std);
                }
            }
            let id = identify(&tr, &sysid_grid(), &IdentifyOptions::default())?;
            response_csv(out, &file("frf_motor.csv"), &id.subs.motor)?;
            response_csv(out, &file("frf_endpoint.csv"), &id.subs.endpoint)?;
            response_csv(out, &file("frf_line.csv"), &id.subs.line)?;
            response_csv(out, &file("frf_whole.csv"), &id.whole)?;
            response_csv(out, &file("fit_whole.csv"), &FrequencyResponse::from_tf(&id.fit.tf, &sysid_grid()))?;

            let q = id.extracted.params;
            let mut rep = String::new();
            writeln!(rep, "identified lumped parameters (motor frame, SI)").unwrap();
            writeln!(rep, "{:<6} {:>14} {:>14} {:>9}", "param", "identified", "reference", "error %").unwrap();
            for (n, got, want) in [
                ("m", q.m, plant.m),
                ("b", q.b, plant.b),
                ("k", q.k, plant.k),
                ("m_e", q.m_e, plant.m_e),
                ("b_e", q.b_e, plant.b_e),
                ("k_e", q.k_e, plant.k_e),
                ("b_s", q.b_s, plant.b_s),
                ("k_s", q.k_s, plant.k_s),
            ] {
                writeln!(rep, "{n:<6} {got:>14.6e} {want:>14.6e} {:>9.3}", 100.0 * (got - want) / want).unwrap();
            }
            let r = id.extracted.residuals;
            writeln!(rep, "sub-fit residuals: motor {:.3e}, endpoint {:.3e}, line {:.3e}", r[0], r[1], r[2]).unwrap();
            writeln!(rep, "flagged: {}", id.extracted.flagged).unwrap();
            writeln!(rep, "whole-system fit X_e/F_e = {}", id.fit.tf).unwrap();
            writeln!(rep, "fit residual {:.3e} after {} iterations", id.fit.residual, id.fit.iterations).unwrap();
            writeln!(rep, "noise: {} x channel RMS, seed {}", a.noise_std, cfg.run.seed).unwrap();
            out.write_text(&file("parameters.txt"), &rep)?;
        }

        AnalysisKind::Impedance => {
            let g = grid(cfg)?;
            let opts = ImpedanceOptions { dt, port: a.port, ..Default::default() };
            let z = measure_impedance(&plant, &ctrl, &g, &opts)?;
            response_csv(out, &file("impedance.csv"), &z)?;
            if plant.is_linear() && a.port == sea_core::impedance::Port::Endpoint {
                if let Ok(law) = LinearLaw::from_config(&ctrl) {
                    let model = network_impedance(&plant, &law)?;
                    response_csv(out, &file("impedance_model.csv"), &FrequencyResponse::from_tf(&model, &g))?;
                }
            }
        }

        AnalysisKind::Workloop => {
            let ExcitationSpec::Sine { amplitude, omega } = cfg.excitation else { unreachable!("checked by validate") };
            let tr = backdrive(&plant, &ctrl, amplitude, omega, a.cycles, dt)?;
            out.write_csv(&file("trace.csv"), &SimTrace::HEADER, trace_rows(&tr, a.decimate))?;
            let ext = work_loop(&tr, LoopForce::External)?;
            let int = work_loop(&tr, LoopForce::Internal)?;
            loop_csv(out, &file("loop_external.csv"), &ext)?;
            loop_csv(out, &file("loop_internal.csv"), &int)?;
            let band = 0.4 * amplitude;
            let mut rep = String::new();
            writeln!(rep, "backdrive {amplitude} rad at {omega} rad/s, controller {}", ctrl.name()).unwrap();
            for (n, lp) in [("external", &ext), ("internal", &int)] {
                let mid = lp.amplitude_over(-band, band)?;
                writeln!(rep, "{n}: area {:.6e} J, amplitude {:.6e} Nm, amplitude over +/-{band} rad {mid:.6e} Nm", lp.area, lp.amplitude)
                    .unwrap();
            }
            out.write_text(&file("workloop.txt"), &rep)?;
            if a.fit_dahl {
                let fit = fit_dahl(&ext)?;
                let mut rep = String::new();
                writeln!(rep, "Dahl fit to the external work loop (n = 1)").unwrap();
                writeln!(rep, "{:<10} {:>12} {:>12}", "", "fitted", "reference").unwrap();
                writeln!(rep, "{:<10} {:>12.6} {:>12.6}", "F_c Nm", fit.f_c, plant.f_c).unwrap();
                writeln!(rep, "{:<10} {:>12.6} {:>12.6}", "sigma Nm/rad", fit.sigma, plant.sigma).unwrap();
                writeln!(rep, "relative residual {:.3e}, {} iterations", fit.residual, fit.iterations).unwrap();
                out.write_text(&file("dahl_fit.txt"), &rep)?;
                let (lo, hi) = ext.position_range();
                let model = synthesize_dahl_loop(&DahlParams { f_c: fit.f_c, sigma: fit.sigma, n: 1.0 }, 0.5 * (hi - lo), 2000, 3)?;
                loop_csv(out, &file("dahl_fit_loop.csv"), &model)?;
            }
        }

        AnalysisKind::Zwidth => {
            let setup = ZWidthSetup {
                lambda: a.lambda,
                sweep: PdSweep { dt, ..Default::default() },
                impedance: ImpedanceOptions { dt, ..Default::default() },
                ..ZWidthSetup::new(grid(cfg)?)
            };
            let rep = zwidth_experiment(&plant, &setup)?;
            response_csv(out, &file("zmin.csv"), &rep.z_min)?;
            response_csv(out, &file("zmax.csv"), &rep.z_max)?;
            curve_csv(out, &file("zwidth.csv"), &rep.curve)?;
            let mut text = String::new();
            let g = rep.gains;
            writeln!(text, "maximum stable PD gains: K_p = {:.6}, K_d = {:.6} (loop radius {:.6})", g.k_p, g.k_d, g.radius).unwrap();
            writeln!(text, "minimum-impedance controller: DOB lambda = {} rad/s with feedforward", a.lambda).unwrap();
            if let Some((zm, curve)) = &rep.motor {
                response_csv(out, &file("zmax_motor.csv"), zm)?;
                curve_csv(out, &file("zwidth_motor.csv"), curve)?;
            }
            for (w, width) in rep.curve.grid.omegas().iter().zip(&rep.curve.width_db) {
                writeln!(text, "omega {w:>10.4} rad/s: width {width:>7.2} dB").unwrap();
            }
            out.write_text(&file("zwidth.txt"), &text)?;
        }

        AnalysisKind::Passivity => {
            let lambda = cfg.controller.lambda().unwrap_or(a.lambda);
            let bounds = nominal_bounds(plant.m, plant.b, plant.k, lambda)?;
            let mut text = format!("{bounds}\n");
            if let ControllerConfig::Dob(d) | ControllerConfig::Composite { dob: d, .. } = ctrl {
                let n = Nominal { m_n: d.m_n, b_n: d.b_n, k_n: d.k_n };
                writeln!(text, "\nconfigured nominal m_n = {:e}, b_n = {:e}, k_n = {:e}", n.m_n, n.b_n, n.k_n).unwrap();
                writeln!(text, "inside bounds: {} (margin {:.3e})", bounds.contains(&n), bounds.margin(&n)).unwrap();
                let report = check_passive(&dob_admittance(&plant, &n, lambda)?, &default_grid())?;
                writeln!(text, "numeric test: {report}").unwrap();
            }
            out.write_text(&file("passivity.txt"), &text)?;
        }
    }
    Ok(())
}
