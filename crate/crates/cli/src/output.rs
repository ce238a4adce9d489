//! CSV and metadata writers.
//!
//! Summary rows: one per (sweep value, policy, seed). Trace rows: one per
//! (slot, server) with columns `t,k,Q,A,f,p_tx,a,D_l,D_tx,P,objective`, where
//! `Q` is the backlog the policy saw and `objective` is the slot's surrogate
//! value (repeated for every server of that slot).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use mec_core::{Policy, RunMetrics};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Swept parameter (`V`, `lambda`) or `none` for single runs.
    pub axis: String,
    pub value: f64,
    pub policy: Policy,
    pub seed: u64,
    pub slots: usize,
    pub avg_power: f64,
    pub avg_queue: f64,
    pub tail_avg_queue: f64,
    pub nonconverged_slots: usize,
    pub mean_iterations: f64,
}

impl SummaryRow {
    pub fn new(axis: &str, value: f64, seed: u64, metrics: &RunMetrics) -> Self {
        Self {
            axis: axis.to_string(),
            value,
            policy: metrics.policy,
            seed,
            slots: metrics.records.len(),
            avg_power: metrics.avg_power,
            avg_queue: metrics.avg_queue,
            tail_avg_queue: metrics.tail_avg_queue,
            nonconverged_slots: metrics.nonconverged_slots,
            mean_iterations: metrics.mean_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "A")]
    pub a_in: f64,
    pub f: f64,
    pub p_tx: f64,
    pub a: f64,
    #[serde(rename = "D_l")]
    pub d_l: f64,
    #[serde(rename = "D_tx")]
    pub d_tx: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub objective: f64,
}

pub fn trace_rows(metrics: &RunMetrics) -> impl Iterator<Item = TraceRow> + '_ {
    metrics.records.iter().flat_map(|r| {
        (0..r.backlog.len()).map(move |k| TraceRow {
            t: r.t,
            k,
            q: r.backlog[k],
            a_in: r.arrivals[k],
            f: r.action.freq[k],
            p_tx: r.action.p_tx[k],
            a: r.action.share[k],
            d_l: r.d_local[k],
            d_tx: r.d_tx[k],
            p: r.power[k],
            objective: r.objective,
        })
    })
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, metrics: &RunMetrics) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in trace_rows(metrics) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}
