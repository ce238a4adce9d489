//! Closed forms and the per-slot solver checked against brute-force scans.

use mec_core::{
    allocate_bandwidth, bandwidth_inner, evaluate_objective, grid_solve_slot, optimal_frequency,
    optimal_tx_power, solve_slot, tx_bits, GridSpec, SolverSettings, SystemConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn servers(k: usize) -> SystemConfig {
    let mut cfg = SystemConfig::reference();
    cfg.num_servers = k;
    cfg.distance = vec![200.0; k];
    cfg.kappa = vec![1e-26; k];
    cfg.cycles_per_bit = vec![3000.0; k];
    cfg.weight = vec![1.0 / 7.0; k];
    cfg.lambda = vec![4.37e5; k];
    cfg
}

/// Returns `(argmin, step)` of `f` over `n` evenly spaced points on `[lo, hi]`.
fn scan(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
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

#[test]
fn frequency_examples_match_scan() {
    let cfg = SystemConfig::reference();
    let summand = |q: f64, f: f64| {
        -(cfg.tau * q / cfg.cycles_per_bit[0]) * f
            + cfg.v * cfg.weight[0] * cfg.kappa[0] * f.powi(3)
    };
    // f* reaches f_max at Q = 3 L w kappa V f_max^2 / tau
    let q_sat: f64 = 3.0 * 3000.0 / 7.0 * 1e-26 * 1e10 * 4e18 / 0.5;
    assert!((q_sat - 1.0286e6).abs() < 1e2, "{q_sat}");
    for q in [1e5, q_sat, 2e6] {
        let (x, step) = scan(0.0, cfg.f_max, 1_000_000, |f| summand(q, f));
        let f = optimal_frequency(q, 0, &cfg).unwrap();
        assert!((f - x).abs() <= step, "Q={q}: closed {f} vs scan {x}");
    }
    let f = optimal_frequency(1e5, 0, &cfg).unwrap();
    assert!((f - 6.236e8).abs() < 1e5);
}

#[test]
fn power_examples_match_scan() {
    let cfg = SystemConfig::reference();
    let gain = cfg.path_gain(0);
    let share = 1.0 / 7.0;
    for q in [1e4, 1e5, 5e5] {
        let summand =
            |p: f64| -q * tx_bits(share, p, gain, &cfg).unwrap() + cfg.v * cfg.weight[0] * p;
        let (x, step) = scan(0.0, cfg.p_tx_max, 1_000_000, summand);
        let p = optimal_tx_power(q, share, gain, 0, &cfg).unwrap();
        assert!((p - x).abs() <= step, "Q={q}: closed {p} vs scan {x}");
    }
    // Q = 1e4 sits strictly inside the box, Q = 5e5 is clamped at p_max.
    let interior = optimal_tx_power(1e4, share, gain, 0, &cfg).unwrap();
    assert!(interior > 1.0 && interior < 2.0, "{interior}");
    assert_eq!(optimal_tx_power(5e5, share, gain, 0, &cfg).unwrap(), 5.0);
}

#[test]
fn inner_bandwidth_matches_grid() {
    let cfg = SystemConfig::reference();
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    for _ in 0..40 {
        let q = 10f64.powf(rng.random_range(4.0..6.5));
        let p = rng.random_range(0.05..5.0);
        let gain = cfg.path_gain(0) * rng.random_range(0.05..4.0);
        // multipliers around the scale where the stationary point is interior
        let lambda = q * cfg.bandwidth * cfg.tau * 10f64.powf(rng.random_range(-1.5..1.5));
        let h = |a: f64| -q * tx_bits(a, p, gain, &cfg).unwrap() + lambda * a;
        let (x, step) = scan(cfg.epsilon, 1.0, n, h);
        let a = bandwidth_inner(q, p, gain, lambda, &cfg, &settings);
        assert!((a - x).abs() <= 2.0 * step, "a={a} grid={x} (q={q}, p={p}, lambda={lambda})");
    }
}

#[test]
fn two_server_allocation_matches_simplex_grid() {
    let cfg = servers(2);
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = [rng.random_range(1e4..1e6), rng.random_range(1e4..1e6)];
        let p = [rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)];
        let gain = [
            cfg.path_gain(0) * rng.random_range(0.05..3.0),
            cfg.path_gain(1) * rng.random_range(0.05..3.0),
        ];
        let value = |a1: f64| {
            -q[0] * tx_bits(a1, p[0], gain[0], &cfg).unwrap()
                - q[1] * tx_bits(1.0 - a1, p[1], gain[1], &cfg).unwrap()
        };
        let (x, _) = scan(cfg.epsilon, 1.0 - cfg.epsilon, 100_001, value);
        let best = value(x);
        let alloc = allocate_bandwidth(&q, &p, &gain, &cfg, &settings).unwrap();
        assert!((alloc.share.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let got = value(alloc.share[0]);
        assert!(got <= best + 1e-3 * best.abs(), "alloc {got} vs grid {best}");
    }
}

#[test]
fn single_server_grid_matches_closed_forms() {
    let cfg = servers(1);
    let settings = SolverSettings::default();
    let grid = GridSpec { points_f: 2001, points_p: 2001, points_a: 2, ..Default::default() };
    for (q, fading) in [(2e5, 0.7), (6e5, 1.3), (1.5e6, 0.2)] {
        let gain = [cfg.path_gain(0) * fading];
        let oracle = grid_solve_slot(&[q], &gain, &cfg, &grid).unwrap();
        let f = optimal_frequency(q, 0, &cfg).unwrap();
        let p = optimal_tx_power(q, 1.0, gain[0], 0, &cfg).unwrap();
        assert!((oracle.action.freq[0] - f).abs() <= cfg.f_max / 2000.0);
        assert!((oracle.action.p_tx[0] - p).abs() <= cfg.p_tx_max / 2000.0);
        let sol = solve_slot(&[q], &gain, &cfg, &settings).unwrap();
        assert_eq!(sol.action.share, vec![1.0]);
        assert!(sol.objective <= oracle.objective);
    }
}

#[test]
fn joint_solver_beats_reference_instance_grid() {
    let cfg = servers(2);
    let gain = [cfg.path_gain(0) * 1.3, cfg.path_gain(1) * 0.4];
    let q = [8e5, 2e5];
    let sol = solve_slot(&q, &gain, &cfg, &SolverSettings::default()).unwrap();
    let oracle = grid_solve_slot(&q, &gain, &cfg, &GridSpec::default()).unwrap();
    assert!(
        sol.objective <= oracle.objective + 0.005 * oracle.objective.abs(),
        "solver {} vs grid {}",
        sol.objective,
        oracle.objective
    );
}

#[test]
fn refining_grid_never_raises_minimum() {
    let cfg = servers(2);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let q = [rng.random_range(0.0..1e6), rng.random_range(0.0..1e6)];
        let gain = [
            cfg.path_gain(0) * rng.random_range(0.1..3.0),
            cfg.path_gain(1) * rng.random_range(0.1..3.0),
        ];
        let mut last = f64::INFINITY;
        // 2^m + 1 points per axis: each grid contains the previous one.
        for m in 2..7 {
            let n = (1 << m) + 1;
            let sol = grid_solve_slot(&q, &gain, &cfg, &GridSpec::uniform(n)).unwrap();
            assert!(sol.objective <= last, "{n}: {} > {last}", sol.objective);
            last = sol.objective;
        }
    }
}

#[test]
fn three_server_grid_is_feasible() {
    let cfg = servers(3);
    let gain: Vec<f64> = (0..3).map(|k| cfg.path_gain(k) * (0.5 + k as f64)).collect();
    let q = [3e5, 6e5, 1e5];
    let grid = GridSpec::uniform(17);
    let oracle = grid_solve_slot(&q, &gain, &cfg, &grid).unwrap();
    assert!(oracle.action.is_feasible(&cfg, 1e-9));
    let sol = solve_slot(&q, &gain, &cfg, &SolverSettings::default()).unwrap();
    assert!(sol.objective <= oracle.objective);
    let check = evaluate_objective(&oracle.action, &q, &gain, &cfg);
    assert_eq!(check, oracle.objective);
}
