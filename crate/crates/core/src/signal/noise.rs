//! Additive white Gaussian noise and SNR measurement.

use std::ops::Range;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use super::{IqTrace, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnrError {
    #[error("signal segment power does not exceed noise power")]
    BelowNoiseFloor,
    #[error("empty or out-of-bounds segment")]
    Segment,
    #[error("signal and noise segments overlap")]
    Overlap,
}

/// Mean `|x|^2`; 0 for an empty slice.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Mean `|x|^2` over samples that are not exactly zero.
///
/// Zero-padding and lead-in therefore do not dilute the SNR reference.
pub fn active_power(samples: &[Complex64]) -> f64 {
    let (sum, count) =
        samples.iter().map(|z| z.norm_sqr()).filter(|&p| p > 0.0).fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn gaussian_noise(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect()
}

/// Adds complex Gaussian noise whose realized mean power is exactly `noise_power`.
pub fn add_awgn_with_power(trace: &IqTrace, noise_power: f64, seed: u64) -> Result<IqTrace, SignalError> {
    if trace.is_empty() {
        return Err(SignalError::Parameter("empty trace"));
    }
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(SignalError::Parameter("noise power"));
    }
    let noise = gaussian_noise(trace.len(), seed);
    let realized = mean_power(&noise);
    let gain = if realized > 0.0 { (noise_power / realized).sqrt() } else { 0.0 };
    let samples = trace.samples.iter().zip(&noise).map(|(s, n)| s + n * gain).collect();
    Ok(IqTrace { samples, sample_rate: trace.sample_rate, t0_ns: trace.t0_ns })
}

/// Adds noise at `target_snr_db` relative to the active signal power.
///
/// `+inf` returns the input unchanged. Same seed, same output.
pub fn add_awgn(trace: &IqTrace, target_snr_db: f64, seed: u64) -> Result<IqTrace, SignalError> {
    if trace.is_empty() {
        return Err(SignalError::Parameter("empty trace"));
    }
    if target_snr_db == f64::INFINITY {
        return Ok(trace.clone());
    }
    if !target_snr_db.is_finite() {
        return Err(SignalError::Parameter("target snr"));
    }
    let signal_power = active_power(&trace.samples);
    add_awgn_with_power(trace, signal_power / 10f64.powf(target_snr_db / 10.0), seed)
}

fn check_range(len: usize, r: &Range<usize>) -> Result<(), SnrError> {
    if r.is_empty() || r.end > len {
        return Err(SnrError::Segment);
    }
    Ok(())
}

/// `10*log10((P_total - P_noise) / P_noise)` with `P_total` from `signal`.
pub fn measure_snr(trace: &IqTrace, signal: Range<usize>, noise: Range<usize>) -> Result<f64, SnrError> {
    check_range(trace.len(), &signal)?;
    check_range(trace.len(), &noise)?;
    if signal.start < noise.end && noise.start < signal.end {
        return Err(SnrError::Overlap);
    }
    let total = mean_power(&trace.samples[signal]);
    let floor = mean_power(&trace.samples[noise]);
    if total <= floor {
        return Err(SnrError::BelowNoiseFloor);
    }
    Ok(10.0 * ((total - floor) / floor).log10())
}
