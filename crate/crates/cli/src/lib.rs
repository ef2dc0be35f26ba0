//! Experiment runner: configs, presets and artifact output for `sea-core`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod error;
pub mod noise;
pub mod presets;
pub mod run;

use std::path::Path;

pub use artifacts::{Artifacts, MANIFEST};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use presets::{preset, presets, Preset};
pub use run::{run_experiment, Overrides};

/// Run labelled configs into `dir` and write the manifest, also on failure.
pub fn run_all(runs: &[(String, ExperimentConfig)], dir: &Path) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::create(dir)?;
    for (prefix, cfg) in runs {
        if let Err(e) = run_experiment(cfg, &mut out, prefix) {
            out.finish(Some(&e.to_string()))?;
            return Err(e);
        }
    }
    out.finish(None)?;
    Ok(out)
}
