//! Endpoint impedance measurement, Z-width, work loops and Dahl fitting.

mod dahl_fit;
mod measure;
mod workloop;
mod zwidth;

pub use dahl_fit::{fit_dahl, DahlFit, AREA_FLOOR};
pub use measure::{commensurate, measure_impedance, measure_point, ImpedanceOptions, PointResult, Port};
pub use workloop::{backdrive, synthesize_dahl_loop, work_loop, LoopForce, WorkLoop, CLOSURE_TOL};
pub use zwidth::{
    max_impedance_controller, max_stable_pd, min_impedance_controller, pd_loop_radius, zwidth, zwidth_experiment,
    PdGains, PdSweep, ZWidthCurve, ZWidthReport, ZWidthSetup,
};
