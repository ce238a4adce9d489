//! System model: static parameters, per-slot state, and the pure transition
//! functions for local processing, transmission, power and queue updates.
//!
//! Every quantity here is linear SI. Conversions from dB / dBm happen once,
//! when a [`ConfigFile`](crate::config::ConfigFile) is loaded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static parameters of one edge network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of edge servers `K`.
    pub num_servers: usize,
    /// Slot length, seconds.
    pub tau: f64,
    /// Total uplink bandwidth, Hz.
    pub bandwidth: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Path-loss constant (linear).
    pub g0: f64,
    /// Path-loss exponent.
    pub theta: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Server-to-cloud distances, meters.
    pub distance: Vec<f64>,
    /// Maximum processor frequency, cycles/s.
    pub f_max: f64,
    /// Maximum transmit power, W.
    pub p_tx_max: f64,
    /// Effective switched capacitance per server.
    pub kappa: Vec<f64>,
    /// CPU cycles needed per bit, per server.
    pub cycles_per_bit: Vec<f64>,
    /// Power weights per server.
    pub weight: Vec<f64>,
    /// Floor on each bandwidth fraction.
    pub epsilon: f64,
    /// Drift/penalty trade-off, bits^2/W.
    pub v: f64,
    /// Mean arrivals per slot, bits.
    pub lambda: Vec<f64>,
    /// Truncation bound on per-slot arrivals, bits.
    pub a_max: f64,
    /// Number of simulated slots.
    pub horizon: usize,
    pub seed: u64,
}

/// Converts a dB ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a dBm power (or dBm/Hz density) to W (or W/Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

impl SystemConfig {
    /// The reference scenario: seven equidistant servers at 200 m, 2 MHz,
    /// -167 dBm/Hz noise, -40 dB path-loss constant, 2 GHz / 5 W caps.
    pub fn reference() -> Self {
        let k = 7;
        let lambda = 4.37e5;
        Self {
            num_servers: k,
            tau: 0.5,
            bandwidth: 2e6,
            noise_psd: dbm_to_watts(-167.0),
            g0: db_to_linear(-40.0),
            theta: 4.0,
            d0: 1.0,
            distance: vec![200.0; k],
            f_max: 2e9,
            p_tx_max: 5.0,
            kappa: vec![1e-26; k],
            cycles_per_bit: vec![3000.0; k],
            weight: vec![1.0 / k as f64; k],
            epsilon: 1e-3,
            v: 1e10,
            lambda: vec![lambda; k],
            a_max: 2.0 * lambda,
            horizon: 5000,
            seed: 1,
        }
    }

    /// Sets every server's mean arrival rate and rescales `a_max` to twice it.
    pub fn with_uniform_lambda(mut self, lambda: f64) -> Self {
        self.lambda = vec![lambda; self.num_servers];
        self.a_max = 2.0 * lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_servers;
        if k == 0 {
            return Err(Error::Config("num_servers must be positive".into()));
        }
        let per_server = [
            ("distance", &self.distance),
            ("kappa", &self.kappa),
            ("cycles_per_bit", &self.cycles_per_bit),
            ("weight", &self.weight),
            ("lambda", &self.lambda),
        ];
        for (name, values) in per_server {
            if values.len() != k {
                return Err(Error::Config(format!(
                    "{name} has {} entries, expected {k}",
                    values.len()
                )));
            }
        }
        let positive = [
            ("tau", self.tau),
            ("bandwidth", self.bandwidth),
            ("noise_psd", self.noise_psd),
            ("g0", self.g0),
            ("theta", self.theta),
            ("d0", self.d0),
            ("f_max", self.f_max),
            ("p_tx_max", self.p_tx_max),
            ("v", self.v),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, values) in &per_server[..4] {
            if let Some(bad) = values.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("{name} entries must be positive, got {bad}")));
            }
        }
        if let Some(bad) = self.lambda.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::Config(format!("lambda entries must be non-negative, got {bad}")));
        }
        if !(self.a_max >= 0.0 && self.a_max.is_finite()) {
            return Err(Error::Config(format!("a_max must be non-negative, got {}", self.a_max)));
        }
        if !(self.epsilon > 0.0 && self.epsilon * k as f64 <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1/K], got {} with K = {k}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Non-fatal configuration smells.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let max_lambda = self.lambda.iter().copied().fold(0.0, f64::max);
        if self.a_max < max_lambda {
            out.push(format!(
                "a_max = {} is below the largest mean arrival {max_lambda}; truncation will bias arrivals",
                self.a_max
            ));
        }
        out
    }

    /// Large-scale path gain `g0 (d0 / d_k)^theta` of server `k`.
    pub fn path_gain(&self, k: usize) -> f64 {
        self.g0 * (self.d0 / self.distance[k]).powf(self.theta)
    }
}

/// Queue backlogs at a slot boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub t: usize,
    /// Backlog per server, bits.
    pub backlog: Vec<f64>,
}

impl NetworkState {
    pub fn empty(num_servers: usize) -> Self {
        Self { t: 0, backlog: vec![0.0; num_servers] }
    }
}

/// One slot's fading draw together with the composite power gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Small-scale power gains.
    pub fading: Vec<f64>,
    /// `fading[k] * path_gain(k)`.
    pub gain: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(fading: Vec<f64>, cfg: &SystemConfig) -> Self {
        let gain = fading.iter().enumerate().map(|(k, g)| g * cfg.path_gain(k)).collect();
        Self { fading, gain }
    }
}

/// The per-slot decision: frequencies, transmit powers and bandwidth fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAction {
    pub freq: Vec<f64>,
    pub p_tx: Vec<f64>,
    pub share: Vec<f64>,
}

impl PolicyAction {
    pub fn zeros(num_servers: usize) -> Self {
        Self {
            freq: vec![0.0; num_servers],
            p_tx: vec![0.0; num_servers],
            share: vec![1.0 / num_servers as f64; num_servers],
        }
    }

    /// Box and simplex constraints, with `tol` slack on the bandwidth sum.
    pub fn is_feasible(&self, cfg: &SystemConfig, tol: f64) -> bool {
        let k = cfg.num_servers;
        if self.freq.len() != k || self.p_tx.len() != k || self.share.len() != k {
            return false;
        }
        let freq_ok = self.freq.iter().all(|f| (0.0..=cfg.f_max).contains(f));
        let p_ok = self.p_tx.iter().all(|p| (0.0..=cfg.p_tx_max).contains(p));
        let share_ok = self.share.iter().all(|a| *a >= cfg.epsilon && *a <= 1.0);
        let sum: f64 = self.share.iter().sum();
        freq_ok && p_ok && share_ok && sum <= 1.0 + tol
    }
}

/// Everything realized during one simulated slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    /// Backlog seen by the policy, `Q(t)`.
    pub backlog: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub channel: ChannelRealization,
    pub action: PolicyAction,
    pub d_local: Vec<f64>,
    pub d_tx: Vec<f64>,
    /// Total power `kappa f^3 + p_tx` per server, W.
    pub power: Vec<f64>,
    /// `Q(t + 1)`.
    pub backlog_next: Vec<f64>,
    /// Drift-plus-penalty surrogate at the chosen action.
    pub objective: f64,
}

impl SlotRecord {
    /// `sum_k w_k P_k`.
    pub fn weighted_power(&self, cfg: &SystemConfig) -> f64 {
        self.power.iter().zip(&cfg.weight).map(|(p, w)| p * w).sum()
    }
}

/// Bits processed locally in one slot at frequency `freq`.
pub fn local_bits(freq: f64, cycles_per_bit: f64, tau: f64) -> f64 {
    tau * freq / cycles_per_bit
}

/// Dynamic CPU power `kappa f^3`.
pub fn local_power(freq: f64, kappa: f64) -> f64 {
    kappa * freq * freq * freq
}

/// Bits offloaded in one slot over an FDMA share `share` of the band.
///
/// The rate is the perspective of the Shannon rate, so it is jointly concave
/// and positively homogeneous in `(share, p_tx)`.
pub fn tx_bits(share: f64, p_tx: f64, gain: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(share > 0.0) {
        return Err(Error::Argument(format!("bandwidth share must be positive, got {share}")));
    }
    if p_tx < 0.0 {
        return Err(Error::Argument(format!("transmit power must be non-negative, got {p_tx}")));
    }
    Ok(tx_bits_unchecked(share, p_tx, gain, cfg))
}

#[inline]
pub(crate) fn tx_bits_unchecked(share: f64, p_tx: f64, gain: f64, cfg: &SystemConfig) -> f64 {
    if p_tx == 0.0 {
        return 0.0;
    }
    let snr = gain * p_tx / (share * cfg.noise_psd * cfg.bandwidth);
    share * cfg.bandwidth * cfg.tau * snr.ln_1p() / std::f64::consts::LN_2
}

/// Applies `Q' = max(Q + A - served, 0)` per server and advances the slot index.
pub fn step_queue(state: &NetworkState, arrivals: &[f64], served: &[f64]) -> NetworkState {
    debug_assert_eq!(state.backlog.len(), arrivals.len());
    debug_assert_eq!(state.backlog.len(), served.len());
    let backlog = state
        .backlog
        .iter()
        .zip(arrivals)
        .zip(served)
        .map(|((q, a), d)| (q + a - d).max(0.0))
        .collect();
    NetworkState { t: state.t + 1, backlog }
}
