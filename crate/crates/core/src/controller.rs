//! Per-slot drift-plus-penalty controller.
//!
//! Each slot minimizes
//!
//! ```text
//!   -sum_k Q_k (D_l,k + D_tx,k) + V sum_k w_k (kappa_k f_k^3 + p_tx,k)
//! ```
//!
//! subject to `0 <= f_k <= f_max`, `0 <= p_tx,k <= p_tx_max`, `a_k >= eps`
//! and `sum_k a_k <= 1`. Frequencies separate per server and have a closed
//! form. Powers and bandwidth shares are coupled; they are found by
//! alternating the closed-form power update at fixed shares with a dual
//! decomposition of the bandwidth problem at fixed powers. The multiplier on
//! the bandwidth budget is located by bracketed root-finding, since the total
//! demanded share is continuous and nonincreasing in it.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{local_bits, local_power, tx_bits_unchecked, PolicyAction, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Cap on power/bandwidth alternations.
    pub alt_max_iters: usize,
    /// Stop alternating once the relative objective improvement drops below this.
    pub alt_rel_tol: f64,
    /// Absolute tolerance on each per-server bandwidth stationary point.
    pub bisect_tol: f64,
    /// Tolerance on `|sum_k a_k - 1|` at the dual optimum.
    pub dual_tol: f64,
    pub dual_max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            alt_max_iters: 50,
            alt_rel_tol: 1e-9,
            bisect_tol: 1e-12,
            dual_tol: 1e-9,
            dual_max_iters: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.alt_rel_tol, self.bisect_tol, self.dual_tol];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config(format!("solver tolerances must be positive: {self:?}")));
        }
        if self.alt_max_iters == 0 || self.dual_max_iters == 0 {
            return Err(Error::Config(format!("solver iteration caps must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSolution {
    pub action: PolicyAction,
    /// Surrogate objective at `action`.
    pub objective: f64,
    pub converged: bool,
    /// Final multiplier on the bandwidth budget.
    pub dual_lambda: f64,
    /// Number of bandwidth/power alternations performed.
    pub iterations: usize,
    /// Objective after the initial power step and after every alternation.
    pub history: Vec<f64>,
}

/// Result of one bandwidth allocation at fixed powers.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthAllocation {
    pub share: Vec<f64>,
    pub multiplier: f64,
    pub converged: bool,
}

fn check_weights(k: usize, cfg: &SystemConfig) -> Result<()> {
    if !(cfg.v > 0.0) {
        return Err(Error::Argument(format!("V must be positive, got {}", cfg.v)));
    }
    if !(cfg.weight[k] > 0.0) {
        return Err(Error::Argument(format!("w[{k}] must be positive, got {}", cfg.weight[k])));
    }
    Ok(())
}

/// Minimizer over `[0, f_max]` of `-(tau Q / L) f + V w kappa f^3`.
pub fn optimal_frequency(backlog: f64, k: usize, cfg: &SystemConfig) -> Result<f64> {
    check_weights(k, cfg)?;
    let stationary = (cfg.tau * backlog
        / (3.0 * cfg.cycles_per_bit[k] * cfg.weight[k] * cfg.kappa[k] * cfg.v))
        .sqrt();
    Ok(stationary.min(cfg.f_max))
}

/// Water-filling power at a fixed bandwidth share, clamped to `[0, p_tx_max]`.
pub fn optimal_tx_power(
    backlog: f64,
    share: f64,
    gain: f64,
    k: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    check_weights(k, cfg)?;
    if share < cfg.epsilon * (1.0 - 1e-12) {
        return Err(Error::Argument(format!(
            "bandwidth share {share} below floor {}",
            cfg.epsilon
        )));
    }
    if !(gain > 0.0) {
        return Err(Error::Argument(format!("channel gain must be positive, got {gain}")));
    }
    let level = backlog * cfg.tau / (cfg.v * cfg.weight[k] * LN_2) - cfg.noise_psd / gain;
    Ok((share * cfg.bandwidth * level).max(0.0).min(cfg.p_tx_max))
}

/// First and second derivatives of `a log2(1 + c / a)` with respect to `a`.
#[inline]
fn rate_slope(share: f64, c: f64) -> (f64, f64) {
    let x = c / share;
    let first = (x.ln_1p() - x / (1.0 + x)) / LN_2;
    let second = -x * x / (share * (1.0 + x) * (1.0 + x) * LN_2);
    (first, second)
}

/// Minimizer over `[eps, 1]` of `-Q a W tau log2(1 + Gamma p / (N0 W a)) + multiplier a`.
///
/// The function is convex in `a`; its derivative runs from `-inf` near zero up
/// to `multiplier` at infinity, so the stationary point is bracketed by sign
/// checks on `[eps, 1]`. The bracket is shrunk by bisection, taking a Newton
/// step instead whenever it lands strictly inside the bracket.
pub fn bandwidth_inner(
    backlog: f64,
    p_tx: f64,
    gain: f64,
    multiplier: f64,
    cfg: &SystemConfig,
    settings: &SolverSettings,
) -> f64 {
    let eps = cfg.epsilon;
    if backlog <= 0.0 || p_tx <= 0.0 {
        return eps;
    }
    if multiplier <= 0.0 {
        return 1.0;
    }
    let c = gain * p_tx / (cfg.noise_psd * cfg.bandwidth);
    let scale = backlog * cfg.bandwidth * cfg.tau;
    let derivs = |a: f64| {
        let (d1, d2) = rate_slope(a, c);
        (multiplier - scale * d1, -scale * d2)
    };

    if derivs(eps).0 >= 0.0 {
        return eps;
    }
    if derivs(1.0).0 <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (eps, 1.0);
    let mut a = 0.5 * (lo + hi);
    // Each pass at least halves the bracket unless Newton converges first.
    for _ in 0..200 {
        let (slope, curvature) = derivs(a);
        if slope < 0.0 {
            lo = a;
        } else if slope > 0.0 {
            hi = a;
        } else {
            return a;
        }
        if hi - lo <= settings.bisect_tol {
            break;
        }
        let newton = a - slope / curvature;
        let bisect = 0.5 * (lo + hi);
        a = if newton > lo && newton < hi && (newton - a).abs() < 0.5 * (hi - lo) {
            if (newton - a).abs() <= settings.bisect_tol {
                return newton;
            }
            newton
        } else {
            bisect
        };
    }
    0.5 * (lo + hi)
}

/// Splits the band among servers at fixed transmit powers.
///
/// Searches the multiplier `lambda >= 0` so that the per-server minimizers
/// exhaust the budget, then scales the shares up to fill any remaining slack
/// (rates never decrease in the share at fixed power).
pub fn allocate_bandwidth(
    backlog: &[f64],
    p_tx: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    settings: &SolverSettings,
) -> Result<BandwidthAllocation> {
    allocate_bandwidth_from(backlog, p_tx, gain, cfg, settings, None)
}

/// [`allocate_bandwidth`] with an optional starting guess for the multiplier.
pub fn allocate_bandwidth_from(
    backlog: &[f64],
    p_tx: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    settings: &SolverSettings,
    hint: Option<f64>,
) -> Result<BandwidthAllocation> {
    let k = cfg.num_servers;
    if backlog.len() != k || p_tx.len() != k || gain.len() != k {
        return Err(Error::Argument(format!("allocation inputs must all have length {k}")));
    }
    if cfg.epsilon * k as f64 > 1.0 {
        return Err(Error::Config(format!(
            "bandwidth floor {} infeasible for {k} servers",
            cfg.epsilon
        )));
    }

    let shares_at = |lambda: f64| -> (Vec<f64>, f64) {
        let s: Vec<f64> = (0..k)
            .map(|i| bandwidth_inner(backlog[i], p_tx[i], gain[i], lambda, cfg, settings))
            .collect();
        let total = s.iter().sum();
        (s, total)
    };

    let active = (0..k).any(|i| backlog[i] > 0.0 && p_tx[i] > 0.0);
    let (mut share, multiplier, converged) = if !active {
        (vec![cfg.epsilon; k], 0.0, true)
    } else {
        let (at_zero, zero_total) = shares_at(0.0);
        if zero_total <= 1.0 {
            (at_zero, 0.0, true)
        } else {
            dual_search(&shares_at, backlog, p_tx, gain, cfg, settings, hint)
        }
    };

    // Surplus goes to servers above the floor in proportion to their share;
    // when every server sits on the floor it is spread over all of them.
    let sum: f64 = share.iter().sum();
    if sum < 1.0 {
        let above: f64 = share.iter().filter(|a| **a > cfg.epsilon).sum();
        if above > 0.0 {
            let scale = 1.0 + (1.0 - sum) / above;
            share.iter_mut().filter(|a| **a > cfg.epsilon).for_each(|a| *a = (*a * scale).min(1.0));
        } else {
            let scale = 1.0 / sum;
            share.iter_mut().for_each(|a| *a *= scale);
        }
    }
    Ok(BandwidthAllocation { share, multiplier, converged })
}

/// Root of `sum_k a_k(lambda) = 1` on `lambda > 0`, where the left side is
/// continuous and nonincreasing.
///
/// The bracket `[lo, hi]` keeps `sum > 1` at `lo` and `sum <= 1` at `hi`; it is
/// found by geometric expansion and then shrunk by regula falsi with the
/// Illinois modification. The `hi` end is returned, so the result is always
/// feasible.
fn dual_search(
    shares_at: &dyn Fn(f64) -> (Vec<f64>, f64),
    backlog: &[f64],
    p_tx: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    settings: &SolverSettings,
    hint: Option<f64>,
) -> (Vec<f64>, f64, bool) {
    let k = backlog.len();
    let excess = |total: f64| total - 1.0;

    // Multiplier at which a lone server would settle exactly on the full band.
    let scale_guess = (0..k)
        .filter(|&i| backlog[i] > 0.0 && p_tx[i] > 0.0)
        .map(|i| {
            let c = gain[i] * p_tx[i] / (cfg.noise_psd * cfg.bandwidth);
            backlog[i] * cfg.bandwidth * cfg.tau * rate_slope(1.0, c).0
        })
        .fold(f64::MIN_POSITIVE, f64::max);
    let start = hint.filter(|h| *h > 0.0 && h.is_finite()).unwrap_or(scale_guess);

    let (s, total) = shares_at(start);
    let (mut lo, mut f_lo, mut hi, mut f_hi, mut hi_share);
    if excess(total) > 0.0 {
        (lo, f_lo) = (start, excess(total));
        let mut probe = start;
        loop {
            probe *= 2.0;
            let (s, total) = shares_at(probe);
            if excess(total) > 0.0 {
                (lo, f_lo) = (probe, excess(total));
            } else {
                (hi, f_hi, hi_share) = (probe, excess(total), s);
                break;
            }
        }
    } else {
        (hi, f_hi, hi_share) = (start, excess(total), s);
        let mut probe = start;
        loop {
            probe *= 0.5;
            if probe < scale_guess * 1e-30 {
                // total(0) > 1 is known, so fall back to the origin.
                let (_, total) = shares_at(0.0);
                (lo, f_lo) = (0.0, excess(total));
                break;
            }
            let (s, total) = shares_at(probe);
            if excess(total) > 0.0 {
                (lo, f_lo) = (probe, excess(total));
                break;
            }
            (hi, f_hi, hi_share) = (probe, excess(total), s);
        }
    }

    let mut converged = -f_hi <= settings.dual_tol;
    let mut side = 0i8;
    let mut iters = 0;
    while !converged && iters < settings.dual_max_iters {
        iters += 1;
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        let (s, total) = shares_at(mid);
        let f_mid = excess(total);
        if f_mid > 0.0 {
            lo = mid;
            f_lo = f_mid;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = f_mid;
            hi_share = s;
            converged = -f_mid <= settings.dual_tol;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    (hi_share, hi, converged)
}

/// `-sum_k Q_k (D_l,k + D_tx,k) + V sum_k w_k P_k`.
pub fn evaluate_objective(
    action: &PolicyAction,
    backlog: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
) -> f64 {
    (0..cfg.num_servers)
        .map(|k| {
            let served = local_bits(action.freq[k], cfg.cycles_per_bit[k], cfg.tau)
                + tx_bits_unchecked(action.share[k], action.p_tx[k], gain[k], cfg);
            let power = local_power(action.freq[k], cfg.kappa[k]) + action.p_tx[k];
            -backlog[k] * served + cfg.v * cfg.weight[k] * power
        })
        .sum()
}

pub(crate) fn check_slot_inputs(backlog: &[f64], gain: &[f64], cfg: &SystemConfig) -> Result<()> {
    let k = cfg.num_servers;
    if backlog.len() != k || gain.len() != k {
        return Err(Error::Argument(format!("backlog and gain must have length {k}")));
    }
    if let Some(q) = backlog.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
        return Err(Error::Argument(format!("backlog must be non-negative, got {q}")));
    }
    if let Some(g) = gain.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::Argument(format!("channel gain must be positive, got {g}")));
    }
    Ok(())
}

pub(crate) fn frequencies(backlog: &[f64], cfg: &SystemConfig) -> Result<Vec<f64>> {
    (0..cfg.num_servers).map(|k| optimal_frequency(backlog[k], k, cfg)).collect()
}

pub(crate) fn powers(
    backlog: &[f64],
    share: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    (0..cfg.num_servers).map(|k| optimal_tx_power(backlog[k], share[k], gain[k], k, cfg)).collect()
}

/// Solves one slot's surrogate problem.
///
/// Starts from the even split, so the first iterate is exactly the
/// even-allocation baseline and the returned objective can never exceed it.
pub fn solve_slot(
    backlog: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    settings: &SolverSettings,
) -> Result<SlotSolution> {
    check_slot_inputs(backlog, gain, cfg)?;
    settings.validate()?;
    if cfg.epsilon * cfg.num_servers as f64 > 1.0 {
        return Err(Error::Config(format!(
            "bandwidth floor {} infeasible for {} servers",
            cfg.epsilon, cfg.num_servers
        )));
    }
    let k = cfg.num_servers;
    let freq = frequencies(backlog, cfg)?;
    let share = vec![1.0 / k as f64; k];
    let p_tx = powers(backlog, &share, gain, cfg)?;
    let mut current = PolicyAction { freq, p_tx, share };
    let mut objective = evaluate_objective(&current, backlog, gain, cfg);

    let mut best = current.clone();
    let mut best_objective = objective;
    let mut history = vec![objective];
    let mut dual_lambda = 0.0;
    let mut dual_hint = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.alt_max_iters {
        iterations += 1;
        let hint = (dual_hint > 0.0).then_some(dual_hint);
        let alloc = allocate_bandwidth_from(backlog, &current.p_tx, gain, cfg, settings, hint)?;
        dual_hint = alloc.multiplier;
        current.share = alloc.share;
        current.p_tx = powers(backlog, &current.share, gain, cfg)?;
        let next = evaluate_objective(&current, backlog, gain, cfg);
        history.push(next);
        debug_assert!(
            next <= objective + 1e-9 * objective.abs().max(1.0),
            "alternation increased objective: {objective} -> {next}"
        );
        if next < best_objective {
            best_objective = next;
            best = current.clone();
            dual_lambda = alloc.multiplier;
        }
        let improvement = objective - next;
        objective = next;
        if improvement <= settings.alt_rel_tol * objective.abs() {
            converged = alloc.converged;
            break;
        }
    }

    Ok(SlotSolution {
        action: best,
        objective: best_objective,
        converged,
        dual_lambda,
        iterations,
        history,
    })
}
