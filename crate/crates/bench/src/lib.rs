//! Fixtures shared by the criterion benches.

use mec_core::SystemConfig;

/// A reference-geometry slot with uneven backlogs and fading.
pub fn uneven_slot(cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let k = cfg.num_servers;
    let backlog = (0..k).map(|i| 2e5 + 1.5e5 * ((i * 7) % 5) as f64).collect();
    let gain = (0..k).map(|i| cfg.path_gain(i) * (0.3 + 0.45 * ((i * 3) % 4) as f64)).collect();
    (backlog, gain)
}
