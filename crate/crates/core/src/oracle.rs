//! Independent verifiers: a brute-force grid solver for the per-slot problem
//! and a checker for the per-slot Lyapunov drift bound.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{evaluate_objective, SlotSolution};
use crate::error::{Error, Result};
use crate::model::{local_bits, local_power, tx_bits, PolicyAction, SlotRecord, SystemConfig};

/// Largest server count the simplex grid supports.
pub const MAX_GRID_SERVERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points on `[0, f_max]`.
    pub points_f: usize,
    /// Points on `[0, p_tx_max]`.
    pub points_p: usize,
    /// Points per free simplex coordinate, on `[eps, 1 - (K - 1) eps]`.
    pub points_a: usize,
    /// Cap on objective-term evaluations.
    pub budget: u128,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points_f: 64, points_p: 64, points_a: 49, budget: 100_000_000 }
    }
}

impl GridSpec {
    pub fn uniform(points: usize) -> Self {
        Self { points_f: points, points_p: points, points_a: points, ..Default::default() }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

/// Bandwidth vectors on the simplex `sum a = 1`, `a >= eps`.
fn simplex_points(k: usize, eps: f64, n: usize) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![1.0]],
        2 => linspace(eps, 1.0 - eps, n).into_iter().map(|a| vec![a, 1.0 - a]).collect(),
        _ => {
            let axis = linspace(eps, 1.0 - 2.0 * eps, n);
            let mut out = Vec::new();
            for &a1 in &axis {
                for &a2 in &axis {
                    let a3 = 1.0 - a1 - a2;
                    if a3 >= eps * (1.0 - 1e-12) {
                        out.push(vec![a1, a2, a3.max(eps)]);
                    }
                }
            }
            out
        }
    }
}

fn argmin(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    values.fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Exhaustive grid minimization of the per-slot objective.
///
/// The objective is a sum of one frequency term and one (share, power) term
/// per server, so for every simplex point the grid minimum over the Cartesian
/// product of frequency and power axes is taken server by server. This is the
/// same minimum as enumerating the full product grid.
pub fn grid_solve_slot(
    backlog: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    grid: &GridSpec,
) -> Result<SlotSolution> {
    let k = cfg.num_servers;
    if k > MAX_GRID_SERVERS {
        return Err(Error::TooManyServers { max: MAX_GRID_SERVERS, got: k });
    }
    if grid.points_f < 2 || grid.points_p < 2 || grid.points_a < 2 {
        return Err(Error::Argument(format!("grid needs >= 2 points per axis: {grid:?}")));
    }
    if backlog.len() != k || gain.len() != k {
        return Err(Error::Argument(format!("backlog and gain must have length {k}")));
    }
    let shares = simplex_points(k, cfg.epsilon, grid.points_a);
    let requested = (k * grid.points_f) as u128 + (shares.len() * k * grid.points_p) as u128;
    if requested > grid.budget {
        return Err(Error::GridBudget { requested, budget: grid.budget });
    }

    let f_axis = linspace(0.0, cfg.f_max, grid.points_f);
    let p_axis = linspace(0.0, cfg.p_tx_max, grid.points_p);
    let penalty = |i: usize| cfg.v * cfg.weight[i];

    let freq: Vec<f64> = (0..k)
        .map(|i| {
            argmin(f_axis.iter().map(|&f| {
                let value = -backlog[i] * local_bits(f, cfg.cycles_per_bit[i], cfg.tau)
                    + penalty(i) * local_power(f, cfg.kappa[i]);
                (f, value)
            }))
            .0
        })
        .collect();

    let best = shares
        .par_iter()
        .enumerate()
        .map(|(idx, share)| {
            let mut total = 0.0;
            let mut p_tx = Vec::with_capacity(k);
            for i in 0..k {
                let (p, value) = argmin(p_axis.iter().map(|&p| {
                    let bits = tx_bits(share[i], p, gain[i], cfg).expect("share >= eps > 0");
                    (p, -backlog[i] * bits + penalty(i) * p)
                }));
                total += value;
                p_tx.push(p);
            }
            (total, idx, p_tx)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("simplex grid is non-empty");

    let (_, idx, p_tx) = best;
    let action = PolicyAction { freq, p_tx, share: shares[idx].clone() };
    let objective = evaluate_objective(&action, backlog, gain, cfg);
    Ok(SlotSolution {
        action,
        objective,
        converged: true,
        dual_lambda: 0.0,
        iterations: 0,
        history: vec![objective],
    })
}

/// Drift-bound check for one realized slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBoundCheck {
    /// `1/2 sum_k (Q_k(t+1)^2 - Q_k(t)^2)`.
    pub drift: f64,
    /// `-sum_k Q_k (D_l,k + D_tx,k)`.
    pub service_term: f64,
    /// Constant with the transmit cap `tau p_max Gamma_k / N0`.
    pub constant_printed: f64,
    /// Constant with the transmit cap `tau p_max Gamma_k / (N0 ln 2)`.
    pub constant_log: f64,
    /// `service_term + constant_printed - drift`.
    pub slack_printed: f64,
    /// `service_term + constant_log - drift`.
    pub slack_log: f64,
}

impl DriftBoundCheck {
    pub fn holds(&self) -> bool {
        self.slack_printed >= 0.0 && self.slack_log >= 0.0
    }
}

/// Evaluates the per-slot bound
/// `dL <= -sum Q_k (D_l,k + D_tx,k) + C` with
/// `C = sum_k max(A_max^2, (D_l,max + D_tx,max)^2) / 2 + sum_k Q_k A_k`.
///
/// The transmit cap uses the slot's realized fading. It is reported under two
/// readings: as `tau p_max Gamma / N0`, and with the `1/ln 2` factor that the
/// inequality `log2(1 + x) <= x / ln 2` actually yields.
pub fn check_lemma1(record: &SlotRecord, cfg: &SystemConfig) -> DriftBoundCheck {
    let k = cfg.num_servers;
    let drift = 0.5
        * (0..k).map(|i| record.backlog_next[i].powi(2) - record.backlog[i].powi(2)).sum::<f64>();
    let service_term =
        -(0..k).map(|i| record.backlog[i] * (record.d_local[i] + record.d_tx[i])).sum::<f64>();
    let queue_arrivals: f64 = (0..k).map(|i| record.backlog[i] * record.arrivals[i]).sum();

    let constant = |ln2_divisor: f64| {
        (0..k)
            .map(|i| {
                let local_max = cfg.tau * cfg.f_max / cfg.cycles_per_bit[i];
                let gain = record.channel.fading[i] * cfg.path_gain(i);
                let tx_max = cfg.tau / cfg.noise_psd * cfg.p_tx_max * gain / ln2_divisor;
                0.5 * (cfg.a_max.powi(2)).max((local_max + tx_max).powi(2))
            })
            .sum::<f64>()
            + queue_arrivals
    };
    let constant_printed = constant(1.0);
    let constant_log = constant(LN_2);
    DriftBoundCheck {
        drift,
        service_term,
        constant_printed,
        constant_log,
        slack_printed: service_term + constant_printed - drift,
        slack_log: service_term + constant_log - drift,
    }
}
