use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Honest bias wander of a non-compensated crystal: an Ornstein-Uhlenbeck
/// component for transient variation, a daily temperature cycle and
/// per-frame estimation noise.
///
/// Defaults put the share of 10/20/30-minute variations above 500 Hz
/// near 0.4%, 1.3% and 1.7%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbJitterModel {
    pub base_hz: f64,
    /// Stationary standard deviation of the OU component.
    pub ou_sigma_hz: f64,
    pub ou_tau_s: f64,
    pub diurnal_amplitude_hz: f64,
    pub estimate_sigma_hz: f64,
}

impl Default for FbJitterModel {
    fn default() -> Self {
        Self {
            base_hz: -20_000.0,
            ou_sigma_hz: 150.0,
            ou_tau_s: 540.0,
            diurnal_amplitude_hz: 100.0,
            estimate_sigma_hz: 20.0,
        }
    }
}

impl FbJitterModel {
    /// `count` biases sampled every `step_s` seconds, exact OU transitions.
    pub fn series(&self, count: usize, step_s: f64, seed: u64) -> Vec<f64> {
        assert!(step_s > 0.0 && self.ou_tau_s > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let decay = (-step_s / self.ou_tau_s).exp();
        let innovation = self.ou_sigma_hz * (1.0 - decay * decay).sqrt();
        let z0: f64 = StandardNormal.sample(&mut rng);
        let mut ou = self.ou_sigma_hz * z0;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                ou = decay * ou + innovation * z;
            }
            let t = i as f64 * step_s;
            let diurnal = self.diurnal_amplitude_hz * (TAU * t / 86_400.0).sin();
            let e: f64 = StandardNormal.sample(&mut rng);
            out.push(self.base_hz + ou + diurnal + self.estimate_sigma_hz * e);
        }
        out
    }
}

/// Share of `|x[i + lag] - x[i]|` above `threshold`.
pub fn consecutive_variation_rate(series: &[f64], lag: usize, threshold: f64) -> f64 {
    if lag == 0 || series.len() <= lag {
        return 0.0;
    }
    let pairs = series.len() - lag;
    let over = (0..pairs).filter(|&i| (series[i + lag] - series[i]).abs() > threshold).count();
    over as f64 / pairs as f64
}
