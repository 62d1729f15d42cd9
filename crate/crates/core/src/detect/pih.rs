//! Pseudorandom interval hopping.
//!
//! Device and gateway share a 256-bit seed. Interval `i` (between the
//! frames with counters `i` and `i + 1`) is drawn from a counter-mode
//! SHA-256 stream, so both sides agree bit for bit:
//!
//! ```text
//! block_i   = SHA-256(seed[0..32] || u64_le(i))
//! x_i       = u64_le(block_i[0..8])
//! span      = max_interval_ns - min_interval_ns
//! interval_i = min_interval_ns + 1 + ((x_i as u128 * span as u128) >> 64)
//! ```
//!
//! `interval_i` lies in `(min, max]` nanoseconds. The gateway measures
//! intervals between onsets on its own clock, so no clock
//! synchronization with the device is needed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DetectError, DeviceProfile, FrameObservation, Verdict};

/// Counter gap beyond which the summed schedule is not attempted.
pub const DEFAULT_REPLAY_WINDOW: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PihConfig {
    #[serde(with = "seed_hex")]
    pub seed: [u8; 32],
    pub min_interval_ns: u64,
    pub max_interval_ns: u64,
    pub deviation_tol_ns: u64,
    pub replay_window: u64,
}

impl PihConfig {
    pub fn new(
        seed: [u8; 32],
        min_interval_ns: u64,
        max_interval_ns: u64,
        deviation_tol_ns: u64,
    ) -> Result<Self, DetectError> {
        let cfg =
            Self { seed, min_interval_ns, max_interval_ns, deviation_tol_ns, replay_window: DEFAULT_REPLAY_WINDOW };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if self.max_interval_ns <= self.min_interval_ns {
            return Err(DetectError::Parameter("max interval must exceed min interval"));
        }
        if self.max_interval_ns > i64::MAX as u64 / 2 {
            return Err(DetectError::Parameter("max interval too large"));
        }
        if self.replay_window == 0 {
            return Err(DetectError::Parameter("replay window must be positive"));
        }
        Ok(())
    }

    /// Interval after the frame with counter `index`, in nanoseconds.
    pub fn interval_ns(&self, index: u64) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed);
        hasher.update(index.to_le_bytes());
        let block = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&block[..8]);
        let x = u64::from_le_bytes(head) as u128;
        let span = (self.max_interval_ns - self.min_interval_ns) as u128;
        self.min_interval_ns + 1 + ((x * span) >> 64) as u64
    }

    /// Scheduled time from counter `from` to counter `to`, `from <= to`.
    pub fn scheduled_ns(&self, from: u64, to: u64) -> u128 {
        (from..to).map(|i| self.interval_ns(i) as u128).sum()
    }
}

/// Interval after the frame with counter `index`, in seconds.
pub fn pih_next_interval(config: &PihConfig, index: u64) -> f64 {
    config.interval_ns(index) as f64 * 1e-9
}

/// Largest whole-second interval whose drift error `t * r` stays within
/// `deviation_tol_s`.
pub fn pih_max_interval(deviation_tol_s: f64, drift_ppm: f64) -> Result<u64, DetectError> {
    if !(deviation_tol_s.is_finite() && deviation_tol_s > 0.0) {
        return Err(DetectError::Parameter("deviation tolerance must be positive"));
    }
    if !(drift_ppm.is_finite() && drift_ppm > 0.0) {
        return Err(DetectError::Parameter("drift rate must be positive"));
    }
    let t = deviation_tol_s / (drift_ppm * 1e-6);
    // Absorbs representation error in quotients that are whole numbers.
    Ok((t * (1.0 + 1e-12)).floor() as u64)
}

/// Schedule plus the last accepted frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PihState {
    pub config: PihConfig,
    pub last_counter: Option<u64>,
    pub last_rx_time_ns: Option<i64>,
}

impl PihState {
    pub fn new(config: PihConfig) -> Self {
        Self { config, last_counter: None, last_rx_time_ns: None }
    }

    pub fn anchored(config: PihConfig, counter: u64, rx_time_ns: i64) -> Self {
        Self { config, last_counter: Some(counter), last_rx_time_ns: Some(rx_time_ns) }
    }
}

/// Checks the measured interval against the scheduled sum since the last
/// accepted frame. An unanchored state is anchored by the observation and
/// reported `Unprofiled`. Alarms leave the anchor unchanged.
pub fn pih_verify(profile: &mut DeviceProfile, obs: &FrameObservation) -> Result<Verdict, DetectError> {
    profile.check_device(obs)?;
    let state = profile.pih.as_mut().ok_or(DetectError::NoPih)?;
    let (last_counter, last_rx) = match (state.last_counter, state.last_rx_time_ns) {
        (Some(c), Some(t)) => (c, t),
        _ => {
            state.last_counter = Some(obs.frame_counter);
            state.last_rx_time_ns = Some(obs.rx_time_ns);
            return Ok(Verdict::Unprofiled);
        }
    };
    if obs.frame_counter <= last_counter {
        return Ok(Verdict::DelaySuspected);
    }
    let gap = obs.frame_counter - last_counter;
    if gap > state.config.replay_window {
        return Err(DetectError::ResyncRequired { gap, window: state.config.replay_window });
    }
    let expected = state.config.scheduled_ns(last_counter, obs.frame_counter) as i128;
    let measured = obs.rx_time_ns as i128 - last_rx as i128;
    if (measured - expected).abs() > state.config.deviation_tol_ns as i128 {
        return Ok(Verdict::DelaySuspected);
    }
    state.last_counter = Some(obs.frame_counter);
    state.last_rx_time_ns = Some(obs.rx_time_ns);
    Ok(if gap == 1 { Verdict::Accept } else { Verdict::GapRecovered })
}

mod seed_hex {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(seed))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let mut seed = [0u8; 32];
        hex::decode_to_slice(&text, &mut seed).map_err(D::Error::custom)?;
        Ok(seed)
    }
}
