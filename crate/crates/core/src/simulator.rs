//! Discrete-time simulation loop.
//!
//! Slot order: observe `Q(t)` and the fading draw, pick an action, then apply
//! the freshly sampled arrivals `A(t)` in the queue update. The policy never
//! sees `A(t)`.
//!
//! Randomness comes from independent ChaCha streams, one per server for
//! arrivals and one per server for fading, all derived from the run seed.
//! Two policies run with the same seed therefore see identical arrivals and
//! channels.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::baselines::solve_slot_even;
use crate::controller::{solve_slot, SlotSolution, SolverSettings};
use crate::error::{Error, Result};
use crate::model::{
    local_bits, local_power, step_queue, tx_bits_unchecked, ChannelRealization, NetworkState,
    SlotRecord, SystemConfig,
};

/// Sampler used for arrivals; echoed into run metadata.
pub const POISSON_SAMPLER: &str =
    "rand_distr 0.5 Poisson: Knuth below mean 12, Cauchy-envelope rejection above";

/// Fraction of final slots averaged into `tail_avg_queue`.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Joint frequency, power and bandwidth optimization.
    Optimal,
    /// Even bandwidth split with optimized frequency and power.
    Even,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::Optimal, Policy::Even];

    pub fn solve(
        self,
        backlog: &[f64],
        gain: &[f64],
        cfg: &SystemConfig,
        settings: &SolverSettings,
    ) -> Result<SlotSolution> {
        match self {
            Policy::Optimal => solve_slot(backlog, gain, cfg, settings),
            Policy::Even => solve_slot_even(backlog, gain, cfg, settings),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Optimal => "optimal",
            Policy::Even => "even",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Policy::Optimal),
            "even" => Ok(Policy::Even),
            other => Err(Error::Argument(format!("unknown policy `{other}`"))),
        }
    }
}

/// Truncated Poisson arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    pub lambda: Vec<f64>,
    pub a_max: f64,
}

impl ArrivalModel {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self { lambda: cfg.lambda.clone(), a_max: cfg.a_max }
    }
}

/// Unit-mean exponential block fading over a fixed geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub path_gain: Vec<f64>,
}

impl ChannelModel {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self { path_gain: (0..cfg.num_servers).map(|k| cfg.path_gain(k)).collect() }
    }
}

/// Per-server random streams for one run.
#[derive(Debug, Clone)]
pub struct RandomStreams {
    pub arrivals: Vec<ChaCha8Rng>,
    pub channels: Vec<ChaCha8Rng>,
}

impl RandomStreams {
    pub fn new(seed: u64, num_servers: usize) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            arrivals: (0..num_servers as u64).map(|k| stream(2 * k)).collect(),
            channels: (0..num_servers as u64).map(|k| stream(2 * k + 1)).collect(),
        }
    }
}

/// One Poisson draw per server, clamped to `a_max`. `rngs` holds one stream per server.
pub fn sample_arrivals<R: Rng>(model: &ArrivalModel, rngs: &mut [R]) -> Vec<f64> {
    model
        .lambda
        .iter()
        .zip(rngs.iter_mut())
        .map(|(&lambda, rng)| {
            if lambda <= 0.0 {
                return 0.0;
            }
            let raw: f64 = Poisson::new(lambda).expect("lambda validated by config").sample(rng);
            raw.min(model.a_max)
        })
        .collect()
}

/// One `Exp(1)` fading draw per server, combined with the path gains.
pub fn sample_channels<R: Rng>(model: &ChannelModel, rngs: &mut [R]) -> ChannelRealization {
    let fading: Vec<f64> = rngs
        .iter_mut()
        .map(|rng| {
            let g: f64 = Exp1.sample(rng);
            g.max(f64::MIN_POSITIVE)
        })
        .collect();
    let gain = fading.iter().zip(&model.path_gain).map(|(g, pg)| g * pg).collect();
    ChannelRealization { fading, gain }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub policy: Policy,
    /// Time average of `sum_k w_k P_k`, W.
    pub avg_power: f64,
    /// Time average of `Q_k(t)` for `t = 1..=T`, per server.
    pub avg_queue_per_server: Vec<f64>,
    /// Mean of `avg_queue_per_server`.
    pub avg_queue: f64,
    /// Server-mean backlog averaged over the final `tail_fraction` of slots.
    pub tail_avg_queue: f64,
    pub tail_fraction: f64,
    pub nonconverged_slots: usize,
    pub mean_iterations: f64,
    pub records: Vec<SlotRecord>,
}

impl RunMetrics {
    /// Rebuilds the summary statistics from `records`.
    pub fn from_records(
        policy: Policy,
        cfg: &SystemConfig,
        records: Vec<SlotRecord>,
        tail_fraction: f64,
        nonconverged_slots: usize,
        total_iterations: usize,
    ) -> Self {
        let k = cfg.num_servers;
        let slots = records.len().max(1) as f64;
        let avg_power = records.iter().map(|r| r.weighted_power(cfg)).sum::<f64>() / slots;
        let mut avg_queue_per_server = vec![0.0; k];
        for r in &records {
            for (acc, q) in avg_queue_per_server.iter_mut().zip(&r.backlog_next) {
                *acc += q;
            }
        }
        avg_queue_per_server.iter_mut().for_each(|q| *q /= slots);
        let avg_queue = avg_queue_per_server.iter().sum::<f64>() / k as f64;

        let tail_start = tail_start(records.len(), tail_fraction);
        let tail = &records[tail_start..];
        let tail_avg_queue = if tail.is_empty() {
            0.0
        } else {
            tail.iter().map(|r| r.backlog_next.iter().sum::<f64>() / k as f64).sum::<f64>()
                / tail.len() as f64
        };
        Self {
            policy,
            avg_power,
            avg_queue_per_server,
            avg_queue,
            tail_avg_queue,
            tail_fraction,
            nonconverged_slots,
            mean_iterations: total_iterations as f64 / slots,
            records,
        }
    }

    /// Server-mean backlog `Q(t + 1)` per slot.
    pub fn mean_queue_trace(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.backlog_next.iter().sum::<f64>() / r.backlog_next.len() as f64)
            .collect()
    }
}

fn tail_start(len: usize, fraction: f64) -> usize {
    let tail = ((len as f64) * fraction).round() as usize;
    len - tail.min(len)
}

/// Executes one slot: decide, realize service and power, update the queues.
pub fn simulate_slot(
    state: &NetworkState,
    channel: ChannelRealization,
    arrivals: Vec<f64>,
    solution: SlotSolution,
    cfg: &SystemConfig,
) -> (NetworkState, SlotRecord) {
    let k = cfg.num_servers;
    let action = solution.action;
    let d_local: Vec<f64> =
        (0..k).map(|i| local_bits(action.freq[i], cfg.cycles_per_bit[i], cfg.tau)).collect();
    let d_tx: Vec<f64> = (0..k)
        .map(|i| tx_bits_unchecked(action.share[i], action.p_tx[i], channel.gain[i], cfg))
        .collect();
    let power: Vec<f64> =
        (0..k).map(|i| local_power(action.freq[i], cfg.kappa[i]) + action.p_tx[i]).collect();
    let served: Vec<f64> = d_local.iter().zip(&d_tx).map(|(l, x)| l + x).collect();
    let next = step_queue(state, &arrivals, &served);
    let record = SlotRecord {
        t: state.t,
        backlog: state.backlog.clone(),
        arrivals,
        channel,
        action,
        d_local,
        d_tx,
        power,
        backlog_next: next.backlog.clone(),
        objective: solution.objective,
    };
    (next, record)
}

/// Runs `cfg.horizon` slots of `policy` from empty queues.
pub fn run(cfg: &SystemConfig, policy: Policy, settings: &SolverSettings) -> Result<RunMetrics> {
    cfg.validate()?;
    settings.validate()?;
    let arrivals_model = ArrivalModel::from_config(cfg);
    let channel_model = ChannelModel::from_config(cfg);
    let mut streams = RandomStreams::new(cfg.seed, cfg.num_servers);
    let mut state = NetworkState::empty(cfg.num_servers);
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut nonconverged = 0;
    let mut iterations = 0;

    for _ in 0..cfg.horizon {
        let channel = sample_channels(&channel_model, &mut streams.channels);
        let solution = policy.solve(&state.backlog, &channel.gain, cfg, settings)?;
        debug_assert!(solution.action.is_feasible(cfg, 1e-9), "infeasible action");
        if !solution.converged {
            nonconverged += 1;
        }
        iterations += solution.iterations;
        let arrivals = sample_arrivals(&arrivals_model, &mut streams.arrivals);
        let (next, record) = simulate_slot(&state, channel, arrivals, solution, cfg);
        debug_assert!(record.backlog_next.iter().all(|q| *q >= 0.0));
        records.push(record);
        state = next;
    }
    Ok(RunMetrics::from_records(
        policy,
        cfg,
        records,
        DEFAULT_TAIL_FRACTION,
        nonconverged,
        iterations,
    ))
}
