//! Experiment runner around `mec_core`: sweep plans, CSV/JSON output and the
//! verification suite behind `mec verify`.

pub mod output;
pub mod plan;
pub mod verify;

use std::path::Path;

use anyhow::Result;
use mec_core::ConfigFile;

pub use output::{SummaryRow, TraceRow};
pub use plan::{run_experiment, Axis, ExperimentPlan};
pub use verify::Report;

/// Loads `path` (or the reference configuration) and applies overrides.
pub fn resolve_config(
    path: Option<&Path>,
    seed: Option<u64>,
    slots: Option<usize>,
    v: Option<f64>,
) -> Result<ConfigFile> {
    let mut cfg = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(slots) = slots {
        cfg.horizon_slots = slots;
    }
    if let Some(v) = v {
        cfg.V = v;
    }
    cfg.to_system()?;
    Ok(cfg)
}
