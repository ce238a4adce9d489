//! Human-editable configuration file.
//!
//! A flat TOML document whose keys carry their units. Decibel quantities are
//! converted to linear SI when the file is turned into a [`SystemConfig`].
//! Per-server keys accept either a scalar (applied to every server) or an
//! array of length `K`.
//!
//! ```toml
//! K = 7
//! tau_s = 0.5
//! W_Hz = 2e6
//! N0_dBm_per_Hz = -167.0
//! g0_dB = -40.0
//! theta = 4.0
//! d0_m = 1.0
//! d_m = 200.0
//! f_max_Hz = 2e9
//! p_tx_max_W = 5.0
//! kappa = 1e-26
//! L_cycles_per_bit = 3000.0
//! epsilon = 1e-3
//! V = 1e10
//! lambda_bits_per_slot = 4.37e5
//! horizon_slots = 5000
//! seed = 1
//! ```
//!
//! `w` defaults to `1/K` and `A_max_bits` to twice the largest `lambda`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, dbm_to_watts, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerServer {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerServer {
    fn expand(&self, name: &str, k: usize) -> Result<Vec<f64>> {
        match self {
            PerServer::Scalar(x) => Ok(vec![*x; k]),
            PerServer::List(v) if v.len() == k => Ok(v.clone()),
            PerServer::List(v) => {
                Err(Error::Config(format!("{name} has {} entries, expected {k}", v.len())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ConfigFile {
    pub K: usize,
    pub tau_s: f64,
    pub W_Hz: f64,
    pub N0_dBm_per_Hz: f64,
    pub g0_dB: f64,
    pub theta: f64,
    pub d0_m: f64,
    pub d_m: PerServer,
    pub f_max_Hz: f64,
    pub p_tx_max_W: f64,
    pub kappa: PerServer,
    pub L_cycles_per_bit: PerServer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<PerServer>,
    pub epsilon: f64,
    pub V: f64,
    pub lambda_bits_per_slot: PerServer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub A_max_bits: Option<f64>,
    pub horizon_slots: usize,
    pub seed: u64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            K: 7,
            tau_s: 0.5,
            W_Hz: 2e6,
            N0_dBm_per_Hz: -167.0,
            g0_dB: -40.0,
            theta: 4.0,
            d0_m: 1.0,
            d_m: PerServer::Scalar(200.0),
            f_max_Hz: 2e9,
            p_tx_max_W: 5.0,
            kappa: PerServer::Scalar(1e-26),
            L_cycles_per_bit: PerServer::Scalar(3000.0),
            w: None,
            epsilon: 1e-3,
            V: 1e10,
            lambda_bits_per_slot: PerServer::Scalar(4.37e5),
            A_max_bits: None,
            horizon_slots: 5000,
            seed: 1,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Converts to linear units and validates.
    pub fn to_system(&self) -> Result<SystemConfig> {
        let k = self.K;
        if k == 0 {
            return Err(Error::Config("K must be positive".into()));
        }
        let lambda = self.lambda_bits_per_slot.expand("lambda_bits_per_slot", k)?;
        let weight = match &self.w {
            Some(w) => w.expand("w", k)?,
            None => vec![1.0 / k as f64; k],
        };
        let a_max =
            self.A_max_bits.unwrap_or_else(|| 2.0 * lambda.iter().copied().fold(0.0, f64::max));
        let cfg = SystemConfig {
            num_servers: k,
            tau: self.tau_s,
            bandwidth: self.W_Hz,
            noise_psd: dbm_to_watts(self.N0_dBm_per_Hz),
            g0: db_to_linear(self.g0_dB),
            theta: self.theta,
            d0: self.d0_m,
            distance: self.d_m.expand("d_m", k)?,
            f_max: self.f_max_Hz,
            p_tx_max: self.p_tx_max_W,
            kappa: self.kappa.expand("kappa", k)?,
            cycles_per_bit: self.L_cycles_per_bit.expand("L_cycles_per_bit", k)?,
            weight,
            epsilon: self.epsilon,
            v: self.V,
            lambda,
            a_max,
            horizon: self.horizon_slots,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_matches_reference() {
        let cfg = ConfigFile::default().to_system().unwrap();
        assert_eq!(cfg, SystemConfig::reference());
    }

    #[test]
    fn parses_doc_example_and_lists() {
        let text = r#"
K = 2
tau_s = 0.5
W_Hz = 2e6
N0_dBm_per_Hz = -167.0
g0_dB = -40.0
theta = 4.0
d0_m = 1.0
d_m = [100.0, 300.0]
f_max_Hz = 2e9
p_tx_max_W = 5.0
kappa = 1e-26
L_cycles_per_bit = 3000.0
w = [0.25, 0.75]
epsilon = 1e-3
V = 1e9
lambda_bits_per_slot = [1e5, 2e5]
A_max_bits = 5e5
horizon_slots = 100
seed = 42
"#;
        let cfg = ConfigFile::parse(text).unwrap().to_system().unwrap();
        assert_eq!(cfg.distance, vec![100.0, 300.0]);
        assert_eq!(cfg.weight, vec![0.25, 0.75]);
        assert_eq!(cfg.a_max, 5e5);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn rejects_bad_lengths_and_unknown_keys() {
        let file = ConfigFile { kappa: PerServer::List(vec![1e-26; 3]), ..Default::default() };
        assert!(file.to_system().is_err());
        let text = ConfigFile::default().to_toml() + "bogus = 1\n";
        assert!(matches!(ConfigFile::parse(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn toml_round_trip() {
        let file = ConfigFile::default();
        assert_eq!(ConfigFile::parse(&file.to_toml()).unwrap(), file);
    }
}
