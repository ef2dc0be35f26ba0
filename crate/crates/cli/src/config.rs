//! Experiment description in sectioned `key = value` form.
//!
//! ```ini
//! name = fig6a-workloop
//!
//! [plant]            ; SI units, motor frame
//! m = 0.0011116
//! ...
//!
//! [controller]
//! type = dob         ; none | proportional | dob | pd | composite
//! lambda = 20        ; rad/s
//!
//! [excitation]
//! type = sine        ; none | chirp | sine | constant
//! amplitude = 0.5
//! omega = 1
//!
//! [analysis]
//! type = workloop    ; simulate | sysid | impedance | workloop | zwidth | passivity
//!
//! [run]
//! dt = 0.0005
//! seed = 0
//! output_dir = out/fig6a-workloop
//! ```
//!
//! Every key is optional and falls back to the value shown by
//! [`ExperimentConfig::default`]. Unknown sections and keys are rejected.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use ini::{Ini, Properties};
use sea_core::control::{ControllerConfig, DobConfig, FeedforwardConfig, ForceSource, PdConfig, DEFAULT_LAMBDA};
use sea_core::impedance::Port;
use sea_core::plant::PlantParams;
use sea_core::signal::ChirpSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    None,
    Proportional { gain: f64, source: ForceSource },
    /// `m_n = None` takes the plant inertia.
    Dob { lambda: f64, m_n: Option<f64>, b_n: f64, k_n: f64 },
    Pd { k_p: f64, k_d: f64, x_target: f64 },
    /// DOB with `P_n = 1/(m s)` plus feedforward built from the plant parameters.
    Composite { lambda: f64, dahl_ff: bool },
}

impl ControllerSpec {
    pub fn resolve(&self, plant: &PlantParams) -> ControllerConfig {
        match *self {
            ControllerSpec::None => ControllerConfig::None,
            ControllerSpec::Proportional { gain, source } => ControllerConfig::ProportionalFf { gain, source },
            ControllerSpec::Dob { lambda, m_n, b_n, k_n } => {
                ControllerConfig::Dob(DobConfig { lambda, m_n: m_n.unwrap_or(plant.m), b_n, k_n })
            }
            ControllerSpec::Pd { k_p, k_d, x_target } => ControllerConfig::Pd(PdConfig { k_p, k_d, x_target }),
            ControllerSpec::Composite { lambda, dahl_ff } => ControllerConfig::Composite {
                dob: DobConfig::frictionless(plant, lambda),
                feedforward: FeedforwardConfig::from_params(plant, dahl_ff),
            },
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ControllerSpec::Dob { lambda, .. } | ControllerSpec::Composite { lambda, .. } => Some(lambda),
            _ => None,
        }
    }

    pub fn set_lambda(&mut self, value: f64) {
        match self {
            ControllerSpec::Dob { lambda, .. } | ControllerSpec::Composite { lambda, .. } => *lambda = value,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExcitationSpec {
    None,
    /// Endpoint torque chirp; frequencies in Hz.
    Chirp(ChirpSpec),
    /// Endpoint torque sine, or the backdrive position for work loops.
    Sine { amplitude: f64, omega: f64 },
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisKind {
    Simulate,
    Sysid,
    Impedance,
    Workloop,
    Zwidth,
    Passivity,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 6] = [
        AnalysisKind::Simulate,
        AnalysisKind::Sysid,
        AnalysisKind::Impedance,
        AnalysisKind::Workloop,
        AnalysisKind::Zwidth,
        AnalysisKind::Passivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisKind::Simulate => "simulate",
            AnalysisKind::Sysid => "sysid",
            AnalysisKind::Impedance => "impedance",
            AnalysisKind::Workloop => "workloop",
            AnalysisKind::Zwidth => "zwidth",
            AnalysisKind::Passivity => "passivity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSpec {
    pub kind: AnalysisKind,
    /// Impedance and Z-width grid, rad/s.
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub port: Port,
    /// Backdrive cycles for work loops.
    pub cycles: usize,
    /// Fit the Dahl model to the external work loop.
    pub fit_dahl: bool,
    /// Gaussian measurement noise on the identification channels, as a
    /// fraction of each channel's RMS.
    pub noise_std: f64,
    /// Observer bandwidth of the Z-width minimum-impedance controller, rad/s.
    pub lambda: f64,
    /// Keep every n-th sample of written time traces.
    pub decimate: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            kind: AnalysisKind::Simulate,
            omega_min: 0.1,
            omega_max: 100.0,
            points: 20,
            port: Port::Endpoint,
            cycles: 3,
            fit_dahl: false,
            noise_std: 0.0,
            lambda: DEFAULT_LAMBDA,
            decimate: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub dt: f64,
    /// Simulated time for `simulate` runs, s.
    pub duration: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self { dt: 1.0 / 2000.0, duration: 10.0, seed: 0, output_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub plant: PlantParams,
    pub controller: ControllerSpec,
    pub excitation: ExcitationSpec,
    pub analysis: AnalysisSpec,
    pub run: RunSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            plant: PlantParams::identified(),
            controller: ControllerSpec::None,
            excitation: ExcitationSpec::None,
            analysis: AnalysisSpec::default(),
            run: RunSpec::default(),
        }
    }
}

/// Typed access to one section; remembers which keys were read.
struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Self { name, props: ini.section(Some(name)), used: BTreeSet::new() }
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.insert(key);
        self.props.and_then(|p| p.get(key))
    }

    fn parse<T: FromStr>(&mut self, key: &'static str, default: T, what: &str) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|_| CliError::validation(self.key(key), format!("expected {what}, got `{v}`"))),
        }
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        let v: f64 = self.parse(key, default, "a number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::validation(self.key(key), "must be finite"))
        }
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.f64(key, 0.0).map(Some),
        }
    }

    fn choice<T: Copy>(&mut self, key: &'static str, default: T, options: &[(&str, T)]) -> Result<T, CliError> {
        let Some(v) = self.raw(key) else { return Ok(default) };
        let v = v.trim();
        options.iter().find(|(n, _)| *n == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            CliError::validation(self.key(key), format!("must be one of {}, got `{v}`", names.join(" | ")))
        })
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(p) = self.props {
            for (k, _) in p.iter() {
                if !self.used.contains(k) {
                    return Err(CliError::validation(format!("{}.{k}", self.name), "unknown key"));
                }
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 5] = ["plant", "controller", "excitation", "analysis", "run"];

const SOURCES: [(&str, ForceSource); 2] = [("internal", ForceSource::Internal), ("external", ForceSource::External)];
const PORTS: [(&str, Port); 2] = [("endpoint", Port::Endpoint), ("motor", Port::Motor)];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::validation("config", e.to_string()))?;
        for (name, props) in ini.iter() {
            match name {
                None => {
                    if let Some((k, _)) = props.iter().find(|(k, _)| *k != "name") {
                        return Err(CliError::validation(k, "unknown key"));
                    }
                }
                Some(s) if !SECTIONS.contains(&s) => return Err(CliError::validation(s, "unknown section")),
                _ => {}
            }
        }
        let d = ExperimentConfig::default();
        let name = ini.general_section().get("name").map(|s| s.trim().to_string()).unwrap_or(d.name);

        let mut s = Section::new(&ini, "plant");
        let p = d.plant;
        let plant = PlantParams {
            m: s.f64("m", p.m)?,
            b: s.f64("b", p.b)?,
            k: s.f64("k", p.k)?,
            m_e: s.f64("m_e", p.m_e)?,
            b_e: s.f64("b_e", p.b_e)?,
            k_e: s.f64("k_e", p.k_e)?,
            b_s: s.f64("b_s", p.b_s)?,
            k_s: s.f64("k_s", p.k_s)?,
            f_c: s.f64("f_c", p.f_c)?,
            sigma: s.f64("sigma", p.sigma)?,
            n_dahl: s.f64("n_dahl", p.n_dahl)?,
        };
        s.finish()?;

        let mut s = Section::new(&ini, "controller");
        let kinds = [("none", 0), ("proportional", 1), ("dob", 2), ("pd", 3), ("composite", 4)];
        let controller = match s.choice("type", 0, &kinds)? {
            0 => ControllerSpec::None,
            1 => ControllerSpec::Proportional {
                gain: s.f64("gain", 1.0)?,
                source: s.choice("source", ForceSource::Internal, &SOURCES)?,
            },
            2 => ControllerSpec::Dob {
                lambda: s.f64("lambda", DEFAULT_LAMBDA)?,
                m_n: s.opt_f64("m_n")?,
                b_n: s.f64("b_n", 0.0)?,
                k_n: s.f64("k_n", 0.0)?,
            },
            3 => ControllerSpec::Pd { k_p: s.f64("k_p", 0.0)?, k_d: s.f64("k_d", 0.0)?, x_target: s.f64("x_target", 0.0)? },
            _ => ControllerSpec::Composite {
                lambda: s.f64("lambda", DEFAULT_LAMBDA)?,
                dahl_ff: s.parse("dahl_ff", true, "true or false")?,
            },
        };
        s.finish()?;

        let mut s = Section::new(&ini, "excitation");
        let kinds = [("none", 0), ("chirp", 1), ("sine", 2), ("constant", 3)];
        let excitation = match s.choice("type", 0, &kinds)? {
            0 => ExcitationSpec::None,
            1 => {
                let c = sea_core::sysid::default_chirp();
                ExcitationSpec::Chirp(ChirpSpec {
                    amplitude: s.f64("amplitude", c.amplitude)?,
                    f0: s.f64("f0", c.f0)?,
                    f1: s.f64("f1", c.f1)?,
                    duration: s.f64("duration", c.duration)?,
                    allow_nyquist: s.parse("allow_nyquist", c.allow_nyquist, "true or false")?,
                })
            }
            2 => ExcitationSpec::Sine { amplitude: s.f64("amplitude", 0.5)?, omega: s.f64("omega", 1.0)? },
            _ => ExcitationSpec::Constant(s.f64("value", 0.0)?),
        };
        s.finish()?;

        let mut s = Section::new(&ini, "analysis");
        let a = d.analysis;
        let kinds: Vec<(&str, AnalysisKind)> = AnalysisKind::ALL.iter().map(|k| (k.as_str(), *k)).collect();
        let analysis = AnalysisSpec {
            kind: s.choice("type", a.kind, &kinds)?,
            omega_min: s.f64("omega_min", a.omega_min)?,
            omega_max: s.f64("omega_max", a.omega_max)?,
            points: s.parse("points", a.points, "a whole number")?,
            port: s.choice("port", a.port, &PORTS)?,
            cycles: s.parse("cycles", a.cycles, "a whole number")?,
            fit_dahl: s.parse("fit_dahl", a.fit_dahl, "true or false")?,
            noise_std: s.f64("noise_std", a.noise_std)?,
            lambda: s.f64("lambda", a.lambda)?,
            decimate: s.parse("decimate", a.decimate, "a whole number")?,
        };
        s.finish()?;

        let mut s = Section::new(&ini, "run");
        let r = d.run;
        let run = RunSpec {
            dt: s.f64("dt", r.dt)?,
            duration: s.f64("duration", r.duration)?,
            seed: s.parse("seed", r.seed, "a non-negative integer")?,
            output_dir: s.raw("output_dir").map(|v| PathBuf::from(v.trim())).unwrap_or(r.output_dir),
        };
        s.finish()?;

        let cfg = ExperimentConfig { name, plant, controller, excitation, analysis, run };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_ini_string(&self) -> String {
        let mut ini = Ini::new();
        ini.with_general_section().set("name", self.name.clone());
        fn put(ini: &mut Ini, section: &str, key: &str, value: impl Display) {
            ini.with_section(Some(section)).set(key, value.to_string());
        }
        let p = &self.plant;
        for (k, v) in [
            ("m", p.m),
            ("b", p.b),
            ("k", p.k),
            ("m_e", p.m_e),
            ("b_e", p.b_e),
            ("k_e", p.k_e),
            ("b_s", p.b_s),
            ("k_s", p.k_s),
            ("f_c", p.f_c),
            ("sigma", p.sigma),
            ("n_dahl", p.n_dahl),
        ] {
            put(&mut ini, "plant", k, v);
        }

        let c = "controller";
        match self.controller {
            ControllerSpec::None => put(&mut ini, c, "type", "none"),
            ControllerSpec::Proportional { gain, source } => {
                put(&mut ini, c, "type", "proportional");
                put(&mut ini, c, "gain", gain);
                put(&mut ini, c, "source", if source == ForceSource::Internal { "internal" } else { "external" });
            }
            ControllerSpec::Dob { lambda, m_n, b_n, k_n } => {
                put(&mut ini, c, "type", "dob");
                put(&mut ini, c, "lambda", lambda);
                if let Some(m_n) = m_n {
                    put(&mut ini, c, "m_n", m_n);
                }
                put(&mut ini, c, "b_n", b_n);
                put(&mut ini, c, "k_n", k_n);
            }
            ControllerSpec::Pd { k_p, k_d, x_target } => {
                put(&mut ini, c, "type", "pd");
                put(&mut ini, c, "k_p", k_p);
                put(&mut ini, c, "k_d", k_d);
                put(&mut ini, c, "x_target", x_target);
            }
            ControllerSpec::Composite { lambda, dahl_ff } => {
                put(&mut ini, c, "type", "composite");
                put(&mut ini, c, "lambda", lambda);
                put(&mut ini, c, "dahl_ff", dahl_ff);
            }
        }

        let e = "excitation";
        match self.excitation {
            ExcitationSpec::None => put(&mut ini, e, "type", "none"),
            ExcitationSpec::Chirp(ch) => {
                put(&mut ini, e, "type", "chirp");
                put(&mut ini, e, "amplitude", ch.amplitude);
                put(&mut ini, e, "f0", ch.f0);
                put(&mut ini, e, "f1", ch.f1);
                put(&mut ini, e, "duration", ch.duration);
                put(&mut ini, e, "allow_nyquist", ch.allow_nyquist);
            }
            ExcitationSpec::Sine { amplitude, omega } => {
                put(&mut ini, e, "type", "sine");
                put(&mut ini, e, "amplitude", amplitude);
                put(&mut ini, e, "omega", omega);
            }
            ExcitationSpec::Constant(v) => {
                put(&mut ini, e, "type", "constant");
                put(&mut ini, e, "value", v);
            }
        }

        let a = &self.analysis;
        let s = "analysis";
        put(&mut ini, s, "type", a.kind.as_str());
        put(&mut ini, s, "omega_min", a.omega_min);
        put(&mut ini, s, "omega_max", a.omega_max);
        put(&mut ini, s, "points", a.points);
        put(&mut ini, s, "port", if a.port == Port::Endpoint { "endpoint" } else { "motor" });
        put(&mut ini, s, "cycles", a.cycles);
        put(&mut ini, s, "fit_dahl", a.fit_dahl);
        put(&mut ini, s, "noise_std", a.noise_std);
        put(&mut ini, s, "lambda", a.lambda);
        put(&mut ini, s, "decimate", a.decimate);

        put(&mut ini, "run", "dt", self.run.dt);
        put(&mut ini, "run", "duration", self.run.duration);
        put(&mut ini, "run", "seed", self.run.seed);
        put(&mut ini, "run", "output_dir", self.run.output_dir.display());

        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("ini output is utf-8")
    }

    /// Range checks plus analysis/excitation compatibility.
    pub fn validate(&self) -> Result<(), CliError> {
        self.plant.validate().map_err(|e| CliError::from_core("plant", e))?;
        self.controller.resolve(&self.plant).validate().map_err(|e| CliError::from_core("controller", e))?;
        let r = &self.run;
        if !(r.dt > 0.0 && r.dt <= 0.01) {
            return Err(CliError::validation("run.dt", "must lie in (0, 0.01] s"));
        }
        if !(r.duration >= 0.0) {
            return Err(CliError::validation("run.duration", "must be >= 0"));
        }
        let a = &self.analysis;
        if !(a.omega_min > 0.0 && a.omega_max > a.omega_min) {
            return Err(CliError::validation("analysis.omega_min", "need 0 < omega_min < omega_max"));
        }
        if a.points < 2 {
            return Err(CliError::validation("analysis.points", "must be >= 2"));
        }
        if a.cycles < 2 {
            return Err(CliError::validation("analysis.cycles", "must be >= 2"));
        }
        if !(a.noise_std >= 0.0) {
            return Err(CliError::validation("analysis.noise_std", "must be >= 0"));
        }
        if !(a.lambda > 0.0) {
            return Err(CliError::validation("analysis.lambda", "must be > 0"));
        }
        if a.decimate == 0 {
            return Err(CliError::validation("analysis.decimate", "must be >= 1"));
        }
        match self.excitation {
            ExcitationSpec::Chirp(c) => {
                c.validate().map_err(|e| CliError::from_core("excitation", e))?;
                c.check_sampling(r.dt).map_err(|e| CliError::from_core("excitation", e))?;
            }
            ExcitationSpec::Sine { amplitude, omega } => {
                if !(omega > 0.0) {
                    return Err(CliError::validation("excitation.omega", "must be > 0"));
                }
                if !(amplitude > 0.0) {
                    return Err(CliError::validation("excitation.amplitude", "must be > 0"));
                }
            }
            _ => {}
        }
        let needs = match a.kind {
            AnalysisKind::Simulate => None,
            AnalysisKind::Sysid => Some(("chirp", matches!(self.excitation, ExcitationSpec::Chirp(_)))),
            AnalysisKind::Workloop => Some(("sine", matches!(self.excitation, ExcitationSpec::Sine { .. }))),
            AnalysisKind::Impedance | AnalysisKind::Zwidth | AnalysisKind::Passivity => {
                Some(("none", self.excitation == ExcitationSpec::None))
            }
        };
        if let Some((want, false)) = needs {
            return Err(CliError::validation(
                "excitation.type",
                format!("analysis `{}` requires excitation `{want}`", a.kind.as_str()),
            ));
        }
        if a.kind == AnalysisKind::Simulate && self.excitation == ExcitationSpec::None && r.duration == 0.0 {
            return Err(CliError::validation("run.duration", "nothing to simulate"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("[plant]\nmass = 1\n").unwrap_err();
        assert!(err.to_string().contains("plant.mass"), "{err}");
    }

    #[test]
    fn bad_number_is_named() {
        let err = ExperimentConfig::parse("[run]\ndt = fast\n").unwrap_err();
        assert!(err.to_string().contains("run.dt"), "{err}");
    }

    #[test]
    fn negative_mass_is_rejected() {
        let err = ExperimentConfig::parse("[plant]\nm = -1\n").unwrap_err();
        assert!(err.to_string().contains("plant"), "{err}");
    }

    #[test]
    fn sysid_needs_a_chirp() {
        let err = ExperimentConfig::parse("[analysis]\ntype = sysid\n").unwrap_err();
        assert!(err.to_string().contains("excitation.type"), "{err}");
    }

    #[test]
    fn dob_without_nominal_mass_takes_the_plant() {
        let cfg = ExperimentConfig::parse("[controller]\ntype = dob\nlambda = 30\n").unwrap();
        let ControllerConfig::Dob(d) = cfg.controller.resolve(&cfg.plant) else { panic!() };
        assert_eq!(d.m_n, cfg.plant.m);
        assert_eq!(d.lambda, 30.0);
    }

    #[test]
    fn serialized_text_parses_back() {
        let cfg = ExperimentConfig {
            controller: ControllerSpec::Dob { lambda: 12.5, m_n: Some(1e-3), b_n: -0.002, k_n: 0.01 },
            excitation: ExcitationSpec::Sine { amplitude: 0.25, omega: 3.0 },
            analysis: AnalysisSpec { kind: AnalysisKind::Workloop, fit_dahl: true, ..Default::default() },
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&cfg.to_ini_string()).unwrap(), cfg);
    }
}
