//! Even-split comparison policy: every server gets `1/K` of the band, while
//! frequency and transmit power are still chosen by their closed forms.

use crate::controller::{
    check_slot_inputs, evaluate_objective, frequencies, powers, SlotSolution, SolverSettings,
};
use crate::error::Result;
use crate::model::{PolicyAction, SystemConfig};

pub fn solve_slot_even(
    backlog: &[f64],
    gain: &[f64],
    cfg: &SystemConfig,
    settings: &SolverSettings,
) -> Result<SlotSolution> {
    check_slot_inputs(backlog, gain, cfg)?;
    settings.validate()?;
    let k = cfg.num_servers;
    let freq = frequencies(backlog, cfg)?;
    let share = vec![1.0 / k as f64; k];
    let p_tx = powers(backlog, &share, gain, cfg)?;
    let action = PolicyAction { freq, p_tx, share };
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::solve_slot;

    #[test]
    fn zero_backlog() {
        let cfg = SystemConfig::reference();
        let sol = solve_slot_even(&[0.0; 7], &[1e-13; 7], &cfg, &Default::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.action, PolicyAction::zeros(7));
    }

    #[test]
    fn identical_servers_match_joint_solver() {
        let cfg = SystemConfig::reference();
        let s = SolverSettings::default();
        let gain = vec![cfg.path_gain(0) * 0.8; 7];
        let q = vec![6e5; 7];
        let even = solve_slot_even(&q, &gain, &cfg, &s).unwrap();
        let joint = solve_slot(&q, &gain, &cfg, &s).unwrap();
        assert_eq!(even.action.freq, joint.action.freq);
        for k in 0..7 {
            assert!((even.action.share[k] - joint.action.share[k]).abs() < 1e-9);
            assert!((even.action.p_tx[k] - joint.action.p_tx[k]).abs() < 1e-6);
        }
        assert!(joint.objective <= even.objective);
        assert!((joint.objective - even.objective).abs() <= 1e-9 * even.objective.abs());
    }

    #[test]
    fn asymmetric_pair_is_dominated() {
        let cfg = SystemConfig::reference();
        let s = SolverSettings::default();
        let gain: Vec<f64> = (0..7).map(|k| cfg.path_gain(k) * (0.2 + 0.3 * k as f64)).collect();
        let q: Vec<f64> = (0..7).map(|k| 1e5 * (1 + k * k) as f64).collect();
        let even = solve_slot_even(&q, &gain, &cfg, &s).unwrap();
        let joint = solve_slot(&q, &gain, &cfg, &s).unwrap();
        assert!(joint.objective < even.objective);
    }
}
