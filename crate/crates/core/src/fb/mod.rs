//! Frequency-bias estimation from one onset-aligned preamble chirp.
//!
//! Only the relative bias `fb = fb_tx - fb_rx` is observable. Three
//! estimators trade cost for robustness: a dechirp FFT quantized to the
//! symbol grid, a linear fit to the unwrapped residual phase, and a
//! least-squares fit of the full signal model by differential evolution.

pub mod de;
mod fft;
mod linreg;
mod lsq;

pub use fft::estimate_fb_fft;
pub use linreg::{estimate_fb_linreg, unwrap_phase, LinregFit};
pub use lsq::{estimate_fb_lsq, lsq_objective, LsqConfig, LsqProblem};

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{mean_power, IqTrace, PhyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Estimator {
    DechirpFft,
    Linreg,
    Lsq,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::DechirpFft => "DECHIRP_FFT",
            Estimator::Linreg => "LINREG",
            Estimator::Lsq => "LSQ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbWarning {
    /// Runner-up FFT bin within 1 dB of the peak.
    AmbiguousPeak,
    /// At least one phase rectification per four samples.
    UnwrapUnreliable,
    /// Optimum lies on a search bound.
    BoundarySolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbEstimate {
    pub delta_hz: f64,
    pub estimator: Estimator,
    /// Objective value (LSQ), regression RSS (LINREG) or peak-to-runner-up dB (FFT).
    pub residual: f64,
    /// Phase offset recovered alongside the bias, where the estimator has one.
    pub theta_rad: Option<f64>,
    pub snr_db: Option<f64>,
    pub warning: Option<FbWarning>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbError {
    #[error("chirp has {got} samples, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("estimate {0} Hz outside half the bandwidth")]
    OutOfBand(f64),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("segment out of range")]
    Segment,
}

pub(crate) fn check_chirp(chirp: &IqTrace, phy: &PhyParams) -> Result<(), FbError> {
    let expected = phy.chirp_samples(chirp.sample_rate);
    if chirp.len() != expected {
        return Err(FbError::Length { got: chirp.len(), expected });
    }
    Ok(())
}

pub(crate) fn check_band(delta_hz: f64, phy: &PhyParams) -> Result<f64, FbError> {
    if !(delta_hz.abs() < phy.bandwidth_hz() / 2.0) {
        return Err(FbError::OutOfBand(delta_hz));
    }
    Ok(delta_hz)
}

/// Preamble chirp 2, `[onset + n, onset + 2n)`, whose amplitude is settled.
pub fn second_chirp(trace: &IqTrace, onset_sample: usize, phy: &PhyParams) -> Result<IqTrace, FbError> {
    let n = phy.chirp_samples(trace.sample_rate);
    let start = onset_sample + n;
    if start + n > trace.len() {
        return Err(FbError::Segment);
    }
    Ok(trace.slice(start..start + n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEstimate {
    /// Complex-envelope magnitude, `>= 0`.
    pub amplitude: f64,
    /// Noise power exceeded signal power and the estimate was clamped to 0.
    pub clamped: bool,
}

/// `sqrt(P_signal - P_noise)` over disjoint ranges.
pub fn estimate_amplitude(
    trace: &IqTrace,
    signal: Range<usize>,
    noise: Range<usize>,
) -> Result<AmplitudeEstimate, FbError> {
    let ok = |r: &Range<usize>| !r.is_empty() && r.end <= trace.len();
    if !ok(&signal) || !ok(&noise) || (signal.start < noise.end && noise.start < signal.end) {
        return Err(FbError::Segment);
    }
    let diff = mean_power(&trace.samples[signal]) - mean_power(&trace.samples[noise]);
    if diff <= 0.0 {
        log::warn!("noise power exceeds signal power; amplitude clamped to 0");
        return Ok(AmplitudeEstimate { amplitude: 0.0, clamped: true });
    }
    Ok(AmplitudeEstimate { amplitude: diff.sqrt(), clamped: false })
}

/// Doppler shift `v / c * f`; positive speed means approaching.
pub fn doppler_fb(speed_mps: f64, freq_hz: f64) -> f64 {
    speed_mps / crate::SPEED_OF_LIGHT * freq_hz
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}
