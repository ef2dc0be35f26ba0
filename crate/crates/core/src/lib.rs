//! Simulation, control and analysis toolkit for fluid-driven series-elastic
//! actuators: a 2-DOF motor / hydraulic line / endpoint lumped model with Dahl
//! hysteresis, disturbance-observer force control with model-based friction
//! feedforward, closed-form passivity bounds, frequency-response system
//! identification and Z-width measurement.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod impedance;
pub mod control;
pub mod lti;
pub mod passivity;
pub mod plant;
pub mod signal;
pub mod sysid;

pub use error::{Error, Result};
pub use exec::Execution;
