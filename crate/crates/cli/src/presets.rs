//! Built-in experiments for the identified gripper. Each preset is
//! a list of labelled runs written side by side into one directory.

use std::path::PathBuf;

use sea_core::control::ForceSource;
use sea_core::plant::PlantParams;
use sea_core::sysid::default_chirp;

use crate::config::{AnalysisKind, AnalysisSpec, ControllerSpec, ExcitationSpec, ExperimentConfig, RunSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// `(file prefix, config)`.
    pub runs: Vec<(String, ExperimentConfig)>,
}

pub const NAMES: [&str; 7] = [
    "fig3-chirp",
    "fig4-sysid",
    "fig5-ff-compare",
    "fig6a-workloop",
    "fig6b-feedforward",
    "fig6c-zwidth",
    "fig7-dahl-fit",
];

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        run: RunSpec { output_dir: PathBuf::from("out").join(name), ..Default::default() },
        ..Default::default()
    }
}

fn analysis(kind: AnalysisKind) -> AnalysisSpec {
    AnalysisSpec { kind, ..Default::default() }
}

fn backdrive() -> ExcitationSpec {
    ExcitationSpec::Sine { amplitude: 0.5, omega: 1.0 }
}

fn composite(dahl_ff: bool) -> ControllerSpec {
    ControllerSpec::Composite { lambda: sea_core::control::DEFAULT_LAMBDA, dahl_ff }
}

fn dob() -> ControllerSpec {
    ControllerSpec::Dob { lambda: sea_core::control::DEFAULT_LAMBDA, m_n: None, b_n: 0.0, k_n: 0.0 }
}

pub fn preset(name: &str) -> Option<Preset> {
    let linear = PlantParams::identified().linear();
    let one = |c: ExperimentConfig| vec![(String::new(), c)];
    let (description, runs) = match name {
        "fig3-chirp" => {
            let chirp = default_chirp();
            let mut c = base(name);
            c.plant = linear;
            c.excitation = ExcitationSpec::Chirp(chirp);
            c.analysis = AnalysisSpec { decimate: 20, ..analysis(AnalysisKind::Simulate) };
            c.run.duration = chirp.duration;
            ("0.3 Nm endpoint chirp, 0.01 Hz to 1 kHz: time traces", one(c))
        }
        "fig4-sysid" => {
            let mut c = base(name);
            c.plant = linear;
            c.excitation = ExcitationSpec::Chirp(default_chirp());
            c.analysis = analysis(AnalysisKind::Sysid);
            ("chirp identification: sub-plant and whole-system FRFs, parameter table", one(c))
        }
        "fig5-ff-compare" => {
            let mut runs = Vec::new();
            for (label, ctrl) in [
                ("passive_", ControllerSpec::None),
                ("external_", ControllerSpec::Proportional { gain: 1.0, source: ForceSource::External }),
                ("internal_", ControllerSpec::Proportional { gain: 1.0, source: ForceSource::Internal }),
            ] {
                let mut c = base(name);
                c.plant = linear;
                c.controller = ctrl;
                c.analysis = AnalysisSpec { omega_min: 0.1, omega_max: 1000.0, points: 31, ..analysis(AnalysisKind::Impedance) };
                runs.push((label.to_string(), c));
            }
            ("endpoint impedance: passive, external and internal force feedback at K_f = 1", runs)
        }
        "fig6a-workloop" => {
            let mut runs = Vec::new();
            for (label, ctrl) in [("passive_", ControllerSpec::None), ("dob_", dob())] {
                let mut c = base(name);
                c.controller = ctrl;
                c.excitation = backdrive();
                c.analysis = analysis(AnalysisKind::Workloop);
                runs.push((label.to_string(), c));
            }
            ("backdrive work loops, passive and with the observer", runs)
        }
        "fig6b-feedforward" => {
            let mut runs = Vec::new();
            for (label, ctrl) in [("passive_", ControllerSpec::None), ("linear_ff_", composite(false)), ("dahl_ff_", composite(true))] {
                let mut c = base(name);
                c.controller = ctrl;
                c.excitation = backdrive();
                c.analysis = analysis(AnalysisKind::Workloop);
                runs.push((label.to_string(), c));
            }
            ("external work loops with linear and with linear plus Dahl feedforward", runs)
        }
        "fig6c-zwidth" => {
            let mut c = base(name);
            c.analysis = AnalysisSpec { omega_min: 0.1, omega_max: 10.0, points: 11, ..analysis(AnalysisKind::Zwidth) };
            ("minimum and maximum stable impedance and their ratio", one(c))
        }
        "fig7-dahl-fit" => {
            let mut c = base(name);
            c.controller = composite(false);
            c.excitation = backdrive();
            c.analysis = AnalysisSpec { fit_dahl: true, ..analysis(AnalysisKind::Workloop) };
            ("Dahl model fitted to the loop left by linear feedforward", one(c))
        }
        _ => return None,
    };
    let name = NAMES.iter().copied().find(|n| *n == name)?;
    Some(Preset { name, description, runs })
}

pub fn presets() -> Vec<Preset> {
    NAMES.iter().map(|n| preset(n).expect("every listed preset exists")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_presets_all_valid() {
        let all = presets();
        assert_eq!(all.len(), 7);
        for p in &all {
            assert!(!p.runs.is_empty());
            for (_, c) in &p.runs {
                c.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            }
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(preset("fig9").is_none());
    }

    #[test]
    fn feedforward_comparison_has_three_curves() {
        let p = preset("fig5-ff-compare").unwrap();
        let labels: Vec<&str> = p.runs.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, ["passive_", "external_", "internal_"]);
    }
}
