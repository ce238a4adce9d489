//! Verification suite: closed forms against dense scans, the joint solver
//! against the grid oracle and the even split, the drift bound over a full
//! run, and the qualitative sweep trends.
//!
//! Every check returns a [`Report`] rather than panicking so that the CLI and
//! the acceptance tests print the same one-line verdicts.

use std::fmt;

use anyhow::Result;
use mec_core::{
    check_lemma1, grid_solve_slot, optimal_frequency, optimal_tx_power, run, solve_slot,
    solve_slot_even, tx_bits, GridSpec, Policy, RunMetrics, SolverSettings, SystemConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Report {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Reference parameters restricted to the first `k` servers.
pub fn reference_with(k: usize) -> SystemConfig {
    let mut cfg = SystemConfig::reference();
    cfg.num_servers = k;
    for v in [&mut cfg.distance, &mut cfg.kappa, &mut cfg.cycles_per_bit, &mut cfg.lambda] {
        v.truncate(k);
    }
    cfg.weight = vec![1.0 / k as f64; k];
    cfg
}

fn log_uniform<R: Rng>(rng: &mut R, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

/// Argmin of `f` over `n` evenly spaced points of `[lo, hi]`, and the spacing.
pub fn scan_argmin(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    for i in 1..n {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    (best.0, step)
}

/// Frequency closed form against a dense scan of its per-server summand,
/// with `(Q, V, w, kappa, L)` drawn log-uniformly over six decades each.
pub fn closed_form_frequency(draws: usize, points: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<SystemConfig> = (0..draws)
        .map(|_| {
            let mut cfg = reference_with(1);
            cfg.v = log_uniform(&mut rng, 7.0, 13.0);
            cfg.weight[0] = log_uniform(&mut rng, -4.0, 2.0);
            cfg.kappa[0] = log_uniform(&mut rng, -29.0, -23.0);
            cfg.cycles_per_bit[0] = log_uniform(&mut rng, 1.0, 7.0);
            cfg.lambda[0] = log_uniform(&mut rng, 2.0, 8.0); // used as Q
            cfg
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|cfg| {
            let q = cfg.lambda[0];
            let (lin, cub) =
                (cfg.tau * q / cfg.cycles_per_bit[0], cfg.v * cfg.weight[0] * cfg.kappa[0]);
            let (x, step) = scan_argmin(0.0, cfg.f_max, points, |f| -lin * f + cub * f * f * f);
            match optimal_frequency(q, 0, cfg) {
                Ok(f) => (f - x).abs() / step,
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Report::new(
        "closed-form frequency",
        worst <= 1.0,
        format!(
            "{draws} draws, {points}-point scan, worst |f* - argmin| = {worst:.3} steps (limit 1)"
        ),
    )
}

/// Transmit-power closed form against a dense scan at a fixed bandwidth share.
pub fn closed_form_power(draws: usize, points: usize, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(SystemConfig, f64, f64, f64)> = (0..draws)
        .map(|_| {
            let mut cfg = reference_with(1);
            cfg.v = log_uniform(&mut rng, 7.0, 13.0);
            cfg.weight[0] = log_uniform(&mut rng, -4.0, 2.0);
            let q = log_uniform(&mut rng, 2.0, 8.0);
            let share = log_uniform(&mut rng, -3.0, 0.0);
            let gain = cfg.path_gain(0) * log_uniform(&mut rng, -2.0, 1.0);
            (cfg, q, share, gain)
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|(cfg, q, share, gain)| {
            let price = cfg.v * cfg.weight[0];
            let summand =
                |p: f64| -q * tx_bits(*share, p, *gain, cfg).unwrap_or(f64::NAN) + price * p;
            let (x, step) = scan_argmin(0.0, cfg.p_tx_max, points, summand);
            match optimal_tx_power(*q, *share, *gain, 0, cfg) {
                Ok(p) => (p - x).abs() / step,
                Err(_) => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    Report::new(
        "closed-form power",
        worst <= 1.0,
        format!(
            "{draws} draws, {points}-point scan, worst |p* - argmin| = {worst:.3} steps (limit 1)"
        ),
    )
}

fn random_instance<R: Rng>(rng: &mut R, cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let q = (0..cfg.num_servers)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..2.0 * cfg.a_max) })
        .collect();
    let gain = (0..cfg.num_servers)
        .map(|k| {
            let fading: f64 = rng.sample(Exp1);
            fading * cfg.path_gain(k)
        })
        .collect();
    (q, gain)
}

/// Joint solver against the K = 2 grid oracle, 0.5 % relative slack.
pub fn joint_vs_grid(instances: usize, seed: u64, grid: &GridSpec) -> Result<Report> {
    let cfg = reference_with(2);
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..instances {
        let (q, gain) = random_instance(&mut rng, &cfg);
        let sol = solve_slot(&q, &gain, &cfg, &settings)?;
        let oracle = grid_solve_slot(&q, &gain, &cfg, grid)?;
        let allowed = oracle.objective + 0.005 * oracle.objective.abs();
        let excess = (sol.objective - oracle.objective) / oracle.objective.abs().max(1e-300);
        worst = worst.max(excess);
        if sol.objective > allowed {
            failures += 1;
        }
    }
    Ok(Report::new(
        "joint solver vs grid oracle",
        failures == 0,
        format!(
            "{instances} K=2 instances, {failures} above grid + 0.5%, worst (solver - grid)/|grid| = {worst:.3e}"
        ),
    ))
}

/// Joint solver never worse than the even split (1e-9 absolute).
pub fn baseline_dominance(instances: usize, seed: u64) -> Result<Report> {
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut strict = 0;
    for i in 0..instances {
        let cfg = if i % 2 == 0 { reference_with(2) } else { SystemConfig::reference() };
        let (q, gain) = random_instance(&mut rng, &cfg);
        let joint = solve_slot(&q, &gain, &cfg, &settings)?;
        let even = solve_slot_even(&q, &gain, &cfg, &settings)?;
        let gap = joint.objective - even.objective;
        worst = worst.max(gap);
        if gap > 1e-9 {
            failures += 1;
        }
        if gap < 0.0 {
            strict += 1;
        }
    }
    Ok(Report::new(
        "baseline dominance",
        failures == 0,
        format!(
            "{instances} instances (K=2,7), {failures} violations, max(joint - even) = {worst:.3e}, strictly better on {strict}"
        ),
    ))
}

/// Drift bound on every slot of a run, under both readings of the constant.
pub fn drift_bound_on_run(metrics: &RunMetrics, cfg: &SystemConfig) -> Report {
    let mut violations = 0;
    let mut min_rel = f64::INFINITY;
    for r in &metrics.records {
        let c = check_lemma1(r, cfg);
        if !c.holds() {
            violations += 1;
        }
        min_rel = min_rel.min(c.slack_printed.min(c.slack_log) / c.constant_log.max(1e-300));
    }
    Report::new(
        "drift bound",
        violations == 0,
        format!(
            "{} slots, {violations} with negative slack, min slack / C = {min_rel:.3e}",
            metrics.records.len()
        ),
    )
}

/// `(avg_power, avg_queue)` indexed `[value][policy][seed]`.
type SweepGrid = Vec<Vec<Vec<(f64, f64)>>>;

/// Runs every (value, policy, seed) combination.
fn sweep(
    base: &SystemConfig,
    values: &[f64],
    seeds: &[u64],
    apply: impl Fn(&SystemConfig, f64) -> SystemConfig + Sync,
    settings: &SolverSettings,
) -> Result<SweepGrid> {
    let jobs: Vec<(usize, usize, usize)> = (0..values.len())
        .flat_map(|v| {
            (0..Policy::ALL.len()).flat_map(move |p| (0..seeds.len()).map(move |s| (v, p, s)))
        })
        .collect();
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(v, p, s)| {
            let mut cfg = apply(base, values[v]);
            cfg.seed = seeds[s];
            let m = run(&cfg, Policy::ALL[p], settings)?;
            Ok((m.avg_power, m.avg_queue))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![vec![Vec::with_capacity(seeds.len()); Policy::ALL.len()]; values.len()];
    for (&(v, p, _), r) in jobs.iter().zip(results) {
        out[v][p].push(r);
    }
    Ok(out)
}

fn seed_mean(rows: &[(f64, f64)]) -> (f64, f64) {
    let n = rows.len() as f64;
    (rows.iter().map(|r| r.0).sum::<f64>() / n, rows.iter().map(|r| r.1).sum::<f64>() / n)
}

/// Worst relative step against the expected direction (`+1` nondecreasing,
/// `-1` nonincreasing). Zero when the sequence is monotone.
fn worst_violation(series: &[f64], direction: f64) -> f64 {
    series
        .windows(2)
        .map(|w| (direction * (w[0] - w[1]) / w[0].abs().max(1e-300)).max(0.0))
        .fold(0.0, f64::max)
}

fn fmt_series(series: &[f64]) -> String {
    series.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

/// Power falls and queues grow with `V`, seed-averaged, 2 % allowance.
pub fn v_sweep_trends(base: &SystemConfig, values: &[f64], seeds: &[u64]) -> Result<Report> {
    let settings = SolverSettings::default();
    let grid = sweep(base, values, seeds, |c, v| SystemConfig { v, ..c.clone() }, &settings)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for (p, policy) in Policy::ALL.iter().enumerate() {
        let means: Vec<(f64, f64)> = grid.iter().map(|row| seed_mean(&row[p])).collect();
        let power: Vec<f64> = means.iter().map(|m| m.0).collect();
        let queue: Vec<f64> = means.iter().map(|m| m.1).collect();
        let (vp, vq) = (worst_violation(&power, -1.0), worst_violation(&queue, 1.0));
        passed &= vp <= 0.02 && vq <= 0.02;
        parts.push(format!(
            "{policy}: power [{}] worst rise {:.2}%, queue [{}] worst drop {:.2}%",
            fmt_series(&power),
            100.0 * vp,
            fmt_series(&queue),
            100.0 * vq
        ));
    }
    Ok(Report::new("V sweep trends", passed, parts.join("; ")))
}

/// Power and queues grow with the arrival rate for both policies, and the
/// even split queues at least as much as the joint policy at every rate.
pub fn lambda_sweep_trends(base: &SystemConfig, rates: &[f64], seed: u64) -> Result<Report> {
    let settings = SolverSettings::default();
    let grid = sweep(base, rates, &[seed], |c, l| c.clone().with_uniform_lambda(l), &settings)?;
    let mut passed = true;
    let mut parts = Vec::new();
    let mut queues = Vec::new();
    for (p, policy) in Policy::ALL.iter().enumerate() {
        let power: Vec<f64> = grid.iter().map(|row| row[p][0].0).collect();
        let queue: Vec<f64> = grid.iter().map(|row| row[p][0].1).collect();
        let (vp, vq) = (worst_violation(&power, 1.0), worst_violation(&queue, 1.0));
        passed &= vp == 0.0 && vq == 0.0;
        parts.push(format!(
            "{policy}: power [{}]{}, queue [{}]{}",
            fmt_series(&power),
            if vp == 0.0 { "" } else { " NOT nondecreasing" },
            fmt_series(&queue),
            if vq == 0.0 { "" } else { " NOT nondecreasing" },
        ));
        queues.push(queue);
    }
    let opt = Policy::ALL.iter().position(|p| *p == Policy::Optimal).unwrap();
    let even = Policy::ALL.iter().position(|p| *p == Policy::Even).unwrap();
    let bad: Vec<String> = rates
        .iter()
        .enumerate()
        .filter(|(i, _)| queues[even][*i] < queues[opt][*i])
        .map(|(i, r)| format!("{r:.4e} ({:.3}x)", queues[even][i] / queues[opt][i]))
        .collect();
    passed &= bad.is_empty();
    parts.push(if bad.is_empty() {
        "even queue >= optimal queue at every rate".to_string()
    } else {
        format!("even queue < optimal queue at rates [{}]", bad.join(", "))
    });
    Ok(Report::new("lambda sweep trends", passed, parts.join("; ")))
}

/// Ordinary least-squares slope of `y` against its index.
pub fn ols_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (v - y_mean);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Default-run comparison: optimal tail backlog below the even split's, and
/// no growth in the optimal trace over slots `window`. The growth test
/// compares the fitted rise across the whole window (slope times window
/// length) with 5 % of the window mean.
pub fn queue_trace_comparison(
    optimal: &RunMetrics,
    even: &RunMetrics,
    window: std::ops::Range<usize>,
) -> Report {
    let trace = optimal.mean_queue_trace();
    let window = window.start.min(trace.len())..window.end.min(trace.len());
    let slice = &trace[window.clone()];
    let mean = slice.iter().sum::<f64>() / slice.len().max(1) as f64;
    let slope = if slice.len() > 1 { ols_slope(slice) } else { 0.0 };
    let rise = slope * slice.len() as f64;
    let flat = rise <= 0.05 * mean;
    let below = optimal.tail_avg_queue < even.tail_avg_queue;
    Report::new(
        "queue trace comparison",
        flat && below,
        format!(
            "tail avg queue optimal {:.4e} {} even {:.4e}; optimal slope over slots {}..{} = {slope:.3e} bits/slot, fitted rise {rise:.4e} vs 5% of mean {:.4e} ({})",
            optimal.tail_avg_queue,
            if below { "<" } else { ">=" },
            even.tail_avg_queue,
            window.start,
            window.end,
            0.05 * mean,
            if flat { "flat" } else { "growing" },
        ),
    )
}

/// Sweep values used by the full suite.
pub const V_VALUES: [f64; 5] = [1e8, 1e9, 1e10, 1e11, 1e12];
pub const SWEEP_SEEDS: [u64; 3] = [1, 2, 3];
pub const LAMBDA_FACTORS: [f64; 4] = [0.5, 0.75, 1.0, 1.25];
/// Window of the optimal trace checked for growth.
pub const TRACE_WINDOW: std::ops::Range<usize> = 1000..5000;

/// Runs every check against `base`, calling `on_report` as each finishes.
/// `quick` shrinks the scans and instance counts and skips the sweeps.
pub fn run_suite(
    base: &SystemConfig,
    quick: bool,
    mut on_report: impl FnMut(&Report),
) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    let mut push = |r: Report| {
        on_report(&r);
        out.push(r);
    };
    let (draws, points, grid_n, dom_n) =
        if quick { (20, 100_000, 5, 100) } else { (200, 1_000_000, 50, 1000) };
    push(closed_form_frequency(draws, points, 1));
    push(closed_form_power(draws, points, 2));
    push(joint_vs_grid(grid_n, 3, &GridSpec::default())?);
    push(baseline_dominance(dom_n, 4)?);

    let settings = SolverSettings::default();
    let optimal = run(base, Policy::Optimal, &settings)?;
    push(drift_bound_on_run(&optimal, base));
    if !quick {
        push(v_sweep_trends(base, &V_VALUES, &SWEEP_SEEDS)?);
        let rates: Vec<f64> = LAMBDA_FACTORS.iter().map(|f| f * 4.37e5).collect();
        push(lambda_sweep_trends(base, &rates, base.seed)?);
    }
    let even = run(base, Policy::Even, &settings)?;
    push(queue_trace_comparison(&optimal, &even, TRACE_WINDOW));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line_is_exact() {
        let y: Vec<f64> = (0..100).map(|i| 3.0 + 0.5 * i as f64).collect();
        assert!((ols_slope(&y) - 0.5).abs() < 1e-12);
        assert!(ols_slope(&[2.0; 10]).abs() < 1e-12);
    }

    #[test]
    fn violations_measure_wrong_direction_only() {
        assert_eq!(worst_violation(&[1.0, 2.0, 3.0], 1.0), 0.0);
        assert!((worst_violation(&[1.0, 0.9, 3.0], 1.0) - 0.1).abs() < 1e-12);
        assert_eq!(worst_violation(&[3.0, 2.0, 2.0], -1.0), 0.0);
    }

    #[test]
    fn scan_finds_parabola_minimum() {
        let (x, step) = scan_argmin(0.0, 1.0, 1001, |x| (x - 0.3).powi(2));
        assert!((x - 0.3).abs() <= step);
    }

    #[test]
    fn small_checks_pass() {
        assert!(closed_form_frequency(5, 10_001, 1).passed);
        assert!(closed_form_power(5, 10_001, 1).passed);
        assert!(baseline_dominance(20, 1).unwrap().passed);
        let r = joint_vs_grid(2, 1, &GridSpec::default()).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn report_line_format() {
        let r = Report::new("x", false, "why".into());
        assert_eq!(r.to_string(), "[FAIL] x: why");
    }
}
