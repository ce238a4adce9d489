//! Online control and simulation of an edge data-processing network.
//!
//! Edge servers buffer randomly arriving data and drain it either by local
//! processing (CPU frequency) or by offloading over a shared FDMA uplink
//! (transmit power and bandwidth share). A drift-plus-penalty controller
//! picks all three every slot to trade weighted power against backlog.
//!
//! - [`model`]: parameters, state types and the per-slot transition functions.
//! - [`controller`]: the per-slot solver.
//! - [`baselines`]: even bandwidth split with optimized frequency and power.
//! - [`simulator`]: the discrete-time loop and run metrics.
//! - [`oracle`]: brute-force grid solver and drift-bound checker.
//! - [`config`]: the unit-annotated configuration file.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod controller;
pub mod error;
pub mod model;
pub mod oracle;
pub mod simulator;

pub use baselines::solve_slot_even;
pub use config::ConfigFile;
pub use controller::{
    allocate_bandwidth, allocate_bandwidth_from, bandwidth_inner, evaluate_objective,
    optimal_frequency, optimal_tx_power, solve_slot, BandwidthAllocation, SlotSolution,
    SolverSettings,
};
pub use error::{Error, Result};
pub use model::{
    local_bits, local_power, step_queue, tx_bits, ChannelRealization, NetworkState, PolicyAction,
    SlotRecord, SystemConfig,
};
pub use oracle::{check_lemma1, grid_solve_slot, DriftBoundCheck, GridSpec};
pub use simulator::{run, Policy, RunMetrics};
