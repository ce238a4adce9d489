//! Experiment plans: a base configuration swept along one axis, for a set of
//! policies and seeds.
//!
//! ```toml
//! config = "reference.toml"   # optional, relative to this file
//! axis = "V"                  # "V", "lambda" or "none"
//! values = [1e8, 1e9, 1e10, 1e11, 1e12]
//! policies = ["optimal", "even"]
//! seeds = [1, 2, 3]
//! out = "results/v-sweep"
//! trace = false
//! slots = 5000                # optional horizon override
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mec_core::simulator::{DEFAULT_TAIL_FRACTION, POISSON_SAMPLER};
use mec_core::{run, ConfigFile, Policy, RunMetrics, SolverSettings, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{write_json, write_summary, write_trace, SummaryRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "none")]
    None,
    V,
    #[serde(rename = "lambda")]
    Lambda,
}

impl Axis {
    /// Copy of `base` with this axis set to `value`. Sweeping `lambda` sets
    /// every server to the same rate and rescales `A_max` to `2 * value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        match self {
            Axis::None => base.clone(),
            Axis::V => SystemConfig { v: value, ..base.clone() },
            Axis::Lambda => base.clone().with_uniform_lambda(value),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::None => "none",
            Axis::V => "V",
            Axis::Lambda => "lambda",
        })
    }
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Axis::None),
            "V" | "v" => Ok(Axis::V),
            "lambda" => Ok(Axis::Lambda),
            other => bail!("unknown sweep axis '{other}' (expected V, lambda or none)"),
        }
    }
}

/// On-disk form of a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub config: Option<PathBuf>,
    pub axis: Axis,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "all_policies")]
    pub policies: Vec<Policy>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub slots: Option<usize>,
}

fn all_policies() -> Vec<Policy> {
    Policy::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: ConfigFile,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub trace: bool,
    pub settings: SolverSettings,
}

impl ExperimentPlan {
    /// Single-point plan over the given policies and seeds.
    pub fn single(
        base: ConfigFile,
        policies: Vec<Policy>,
        seeds: Vec<u64>,
        out_dir: PathBuf,
    ) -> Self {
        Self {
            base,
            axis: Axis::None,
            values: vec![0.0],
            policies,
            seeds,
            out_dir,
            trace: false,
            settings: SolverSettings::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading plan {}", path.display()))?;
        let file: PlanFile =
            toml::from_str(&text).with_context(|| format!("parsing plan {}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut base = match &file.config {
            Some(c) => ConfigFile::load(dir.join(c))?,
            None => ConfigFile::default(),
        };
        if let Some(slots) = file.slots {
            base.horizon_slots = slots;
        }
        let values = if file.axis == Axis::None { vec![0.0] } else { file.values };
        let plan = Self {
            base,
            axis: file.axis,
            values,
            policies: file.policies,
            seeds: file.seeds,
            out_dir: dir.join(file.out),
            trace: file.trace,
            settings: SolverSettings::default(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let base = self.base.to_system()?;
        self.settings.validate()?;
        if self.values.is_empty() {
            bail!("plan has no sweep values");
        }
        if self.policies.is_empty() {
            bail!("plan has no policies");
        }
        if self.seeds.is_empty() {
            bail!("plan has no seeds");
        }
        for &v in &self.values {
            if self.axis != Axis::None && !(v.is_finite() && v > 0.0) {
                bail!("sweep value {v} must be finite and positive");
            }
            self.axis.apply(&base, v).validate()?;
        }
        Ok(())
    }

    /// Jobs in output order: value, then policy, then seed.
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for &value in &self.values {
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    jobs.push(Job { value, policy, seed });
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub value: f64,
    pub policy: Policy,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    poisson_sampler: &'static str,
    tail_fraction: f64,
    axis: Axis,
    values: &'a [f64],
    policies: &'a [Policy],
    seeds: &'a [u64],
    settings: &'a SolverSettings,
    config: &'a ConfigFile,
}

pub fn trace_file_name(axis: Axis, job: &Job) -> String {
    match axis {
        Axis::None => format!("trace_{}_seed{}.csv", job.policy, job.seed),
        _ => format!("trace_{axis}{}_{}_seed{}.csv", job.value, job.policy, job.seed),
    }
}

/// Runs one job and returns its metrics.
pub fn run_job(plan: &ExperimentPlan, base: &SystemConfig, job: &Job) -> Result<RunMetrics> {
    let mut cfg = plan.axis.apply(base, job.value);
    cfg.seed = job.seed;
    Ok(run(&cfg, job.policy, &plan.settings)?)
}

/// Runs every job (in parallel) and writes `summary.csv`,
/// `summary.meta.json` and, if requested, per-run traces under `out_dir`.
///
/// Rows from jobs that finished are written even when another job fails;
/// the first failure is then returned.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<SummaryRow>> {
    plan.validate()?;
    let base = plan.base.to_system()?;
    fs::create_dir_all(&plan.out_dir)
        .with_context(|| format!("creating {}", plan.out_dir.display()))?;
    let trace_dir = plan.out_dir.join("traces");
    if plan.trace {
        fs::create_dir_all(&trace_dir)?;
    }
    write_json(
        &plan.out_dir.join("summary.meta.json"),
        &Metadata {
            tool: "mec",
            version: env!("CARGO_PKG_VERSION"),
            poisson_sampler: POISSON_SAMPLER,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            axis: plan.axis,
            values: &plan.values,
            policies: &plan.policies,
            seeds: &plan.seeds,
            settings: &plan.settings,
            config: &plan.base,
        },
    )?;

    let axis = plan.axis.to_string();
    let results: Vec<Result<SummaryRow>> = plan
        .jobs()
        .par_iter()
        .map(|job| {
            let metrics = run_job(plan, &base, job).with_context(|| {
                format!("{} {}={} seed {}", job.policy, axis, job.value, job.seed)
            })?;
            if plan.trace {
                write_trace(&trace_dir.join(trace_file_name(plan.axis, job)), &metrics)?;
            }
            Ok(SummaryRow::new(&axis, job.value, job.seed, &metrics))
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    write_summary(&plan.out_dir.join("summary.csv"), &rows)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}
