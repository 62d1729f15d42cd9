use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AttackError;
use crate::signal::{active_power, IqTrace};

/// Victim plus the collision scaled to `scr_db` and delayed by
/// `round(rtm * victim.len())` samples. Output length is
/// `max(victim, offset + collision)`; `scr = +inf` returns the victim.
pub fn synthesize_collision(
    victim: &IqTrace,
    collision: &IqTrace,
    scr_db: f64,
    rtm: f64,
) -> Result<IqTrace, AttackError> {
    if victim.sample_rate != collision.sample_rate {
        return Err(AttackError::SampleRate(victim.sample_rate, collision.sample_rate));
    }
    if !(rtm >= 0.0 && rtm.is_finite()) {
        return Err(AttackError::Parameter("rtm must be finite and non-negative"));
    }
    if scr_db == f64::INFINITY {
        return Ok(victim.clone());
    }
    if scr_db.is_nan() || scr_db == f64::NEG_INFINITY {
        return Err(AttackError::Parameter("scr must be finite or +inf"));
    }
    let pv = active_power(&victim.samples);
    let pc = active_power(&collision.samples);
    if pv <= 0.0 || pc <= 0.0 {
        return Err(AttackError::Parameter("victim and collision must carry power"));
    }
    let gain = (pv / pc / 10f64.powf(scr_db / 10.0)).sqrt();
    let offset = (rtm * victim.len() as f64).round() as usize;
    let len = victim.len().max(offset + collision.len());
    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    samples[..victim.len()].copy_from_slice(&victim.samples);
    for (s, c) in samples[offset..].iter_mut().zip(&collision.samples) {
        *s += c * gain;
    }
    Ok(IqTrace { samples, sample_rate: victim.sample_rate, t0_ns: victim.t0_ns })
}

/// Re-transmission `tau_s` later through a chain with bias `fb_hz` and
/// carrier phase `phase_rad`.
pub fn replay(victim: &IqTrace, tau_s: f64, fb_hz: f64, phase_rad: f64) -> Result<IqTrace, AttackError> {
    if !(tau_s >= 0.0 && tau_s.is_finite()) {
        return Err(AttackError::Parameter("replay delay must be finite and non-negative"));
    }
    if !fb_hz.is_finite() || !phase_rad.is_finite() {
        return Err(AttackError::Parameter("replay bias and phase must be finite"));
    }
    let step = TAU * fb_hz / victim.sample_rate;
    let samples = victim
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * Complex64::from_polar(1.0, step * n as f64 + phase_rad))
        .collect();
    Ok(IqTrace { samples, sample_rate: victim.sample_rate, t0_ns: victim.t0_ns + (tau_s * 1e9).round() as i64 })
}

/// Uniform carrier phase for a replay chain.
pub fn random_replay_phase(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random_range(0.0..TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(len: usize, amp: f64) -> IqTrace {
        IqTrace::new((0..len).map(|n| Complex64::from_polar(amp, 0.01 * n as f64)).collect(), 1e6)
    }

    #[test]
    fn infinite_scr_is_victim() {
        let v = tone(100, 1.0);
        assert_eq!(synthesize_collision(&v, &tone(100, 3.0), f64::INFINITY, 0.3).unwrap(), v);
    }

    #[test]
    fn duration_adds_rtm_share() {
        let out = synthesize_collision(&tone(1000, 1.0), &tone(1000, 1.0), 0.0, 0.25).unwrap();
        assert_eq!(out.len(), 1250);
        assert!((out.samples[1100] - tone(1000, 1.0).samples[850]).norm() < 1e-12);
    }

    #[test]
    fn mismatched_rates_rejected() {
        let mut c = tone(10, 1.0);
        c.sample_rate = 2e6;
        assert_eq!(synthesize_collision(&tone(10, 1.0), &c, 0.0, 0.0), Err(AttackError::SampleRate(1e6, 2e6)));
    }

    #[test]
    fn replay_identity_and_shift() {
        let v = tone(50, 1.0);
        assert_eq!(replay(&v, 0.0, 0.0, 0.0).unwrap(), v);
        let r = replay(&v, 0.15, 0.0, 0.0).unwrap();
        assert_eq!(r.t0_ns, 150_000_000);
        assert!(replay(&v, -1.0, 0.0, 0.0).is_err());
    }
}
