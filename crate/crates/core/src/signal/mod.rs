//! Baseband LoRa signal model.
//!
//! The received phase of an up chirp sampled at local time `t` is
//!
//! ```text
//! phase(t) = pi*W^2/2^S * t^2 - pi*W*t + 2*pi*fb*t + theta
//! I(t) = A/2 * cos(phase(t)),  Q(t) = A/2 * sin(phase(t))
//! ```
//!
//! where `fb = fb_tx - fb_rx` and `theta = theta_tx - theta_rx`.

mod chirp;
pub mod demod;
pub mod io;
mod noise;
mod spectrogram;

pub use chirp::{
    gen_down_chirp, gen_frame, gen_up_chirp, gen_up_chirp_symbol, up_sweep_phase, FrameLayout, PREAMBLE_CHIRPS,
    SFD_WHOLE_CHIRPS,
};
pub use noise::{active_power, add_awgn, add_awgn_with_power, mean_power, measure_snr, SnrError};
pub use spectrogram::{column_count, spectrogram, spectrogram_with, Spectrogram, SpectrogramConfig};

use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// RTL-SDR style sampling convention used throughout, samples/s.
pub const DEFAULT_SAMPLE_RATE: f64 = 2.4e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("spreading factor {0} outside 6..=12")]
    SpreadingFactor(u8),
    #[error("bandwidth {0} Hz is not one of 125/250/500 kHz")]
    Bandwidth(f64),
    #[error("sample rate {rate} Hz below Nyquist rate {min} Hz")]
    Aliasing { rate: f64, min: f64 },
    #[error("non-finite or out-of-range parameter: {0}")]
    Parameter(&'static str),
    #[error("payload symbol {symbol} outside [0, {limit})")]
    Symbol { symbol: u32, limit: u32 },
    #[error("trace has {len} samples, fewer than one window of {window}")]
    TooShort { len: usize, window: usize },
}

/// LoRa channel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Bandwidth {
    Khz125,
    Khz250,
    Khz500,
}

impl Bandwidth {
    pub fn hz(self) -> f64 {
        match self {
            Bandwidth::Khz125 => 125e3,
            Bandwidth::Khz250 => 250e3,
            Bandwidth::Khz500 => 500e3,
        }
    }

    pub fn from_hz(hz: f64) -> Result<Self, SignalError> {
        match hz {
            x if x == 125e3 => Ok(Bandwidth::Khz125),
            x if x == 250e3 => Ok(Bandwidth::Khz250),
            x if x == 500e3 => Ok(Bandwidth::Khz500),
            other => Err(SignalError::Bandwidth(other)),
        }
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = SignalError;
    fn try_from(hz: f64) -> Result<Self, SignalError> {
        Bandwidth::from_hz(hz)
    }
}

impl From<Bandwidth> for f64 {
    fn from(bw: Bandwidth) -> f64 {
        bw.hz()
    }
}

/// Informational coding-rate tag; the symbol-level model ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CodingRate {
    #[default]
    Cr4_5,
    Cr4_6,
    Cr4_7,
    Cr4_8,
}

/// Physical-layer configuration. Construction validates `S` in 6..=12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhyParams {
    spreading_factor: u8,
    bandwidth: Bandwidth,
    pub center_freq_hz: f64,
    pub coding_rate: CodingRate,
}

impl PhyParams {
    pub fn new(spreading_factor: u8, bandwidth: Bandwidth, center_freq_hz: f64) -> Result<Self, SignalError> {
        if !(6..=12).contains(&spreading_factor) {
            return Err(SignalError::SpreadingFactor(spreading_factor));
        }
        if !center_freq_hz.is_finite() || center_freq_hz < 0.0 {
            return Err(SignalError::Parameter("center_freq_hz"));
        }
        Ok(Self { spreading_factor, bandwidth, center_freq_hz, coding_rate: CodingRate::default() })
    }

    /// S=7, 125 kHz at 869.75 MHz.
    pub fn eu868_sf7() -> Self {
        Self::new(7, Bandwidth::Khz125, 869.75e6).expect("static parameters are valid")
    }

    pub fn spreading_factor(&self) -> u8 {
        self.spreading_factor
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth.hz()
    }

    /// Chips per symbol, `2^S`.
    pub fn chips(&self) -> u32 {
        1 << self.spreading_factor
    }

    /// Symbol duration `2^S / W`, seconds.
    pub fn chirp_time(&self) -> f64 {
        self.chips() as f64 / self.bandwidth_hz()
    }

    /// Frequency spacing of adjacent symbols, `W / 2^S`, Hz.
    pub fn bin_width_hz(&self) -> f64 {
        self.bandwidth_hz() / self.chips() as f64
    }

    /// Sweep rate `W^2 / 2^S`, Hz/s.
    pub fn sweep_rate(&self) -> f64 {
        self.bandwidth_hz() * self.bandwidth_hz() / self.chips() as f64
    }

    /// Samples per chirp, `round(fs * 2^S / W)`.
    pub fn chirp_samples(&self, sample_rate: f64) -> usize {
        (sample_rate * self.chirp_time()).round() as usize
    }

    pub(crate) fn check_rate(&self, sample_rate: f64) -> Result<(), SignalError> {
        let min = 2.0 * self.bandwidth_hz();
        if !sample_rate.is_finite() {
            return Err(SignalError::Parameter("sample_rate"));
        }
        if sample_rate < min {
            return Err(SignalError::Aliasing { rate: sample_rate, min });
        }
        Ok(())
    }
}

/// Transmitter-side impairments and amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxParams {
    pub fb_hz: f64,
    /// In `[0, 2*pi)`.
    pub phase_rad: f64,
    /// Peak-to-peak style amplitude `A`; I and Q swing by `A/2`.
    pub amplitude: f64,
    /// Fraction of chirp 1 covered by a linear amplitude ramp from 0; 0 disables.
    pub ramp_fraction: f64,
}

impl Default for TxParams {
    fn default() -> Self {
        Self { fb_hz: 0.0, phase_rad: 0.0, amplitude: 2.0, ramp_fraction: 0.25 }
    }
}

impl TxParams {
    pub fn new(fb_hz: f64, phase_rad: f64, amplitude: f64) -> Self {
        Self { fb_hz, phase_rad, amplitude, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !self.fb_hz.is_finite() {
            return Err(SignalError::Parameter("fb_tx"));
        }
        if !(0.0..TAU).contains(&self.phase_rad) {
            return Err(SignalError::Parameter("phase_tx"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(SignalError::Parameter("amplitude"));
        }
        if !(0.0..=1.0).contains(&self.ramp_fraction) {
            return Err(SignalError::Parameter("ramp_fraction"));
        }
        Ok(())
    }
}

/// Receiver-side oscillator state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RxParams {
    pub fb_hz: f64,
    /// In `[0, 2*pi)`.
    pub phase_rad: f64,
    pub noise_floor_db: f64,
}

impl RxParams {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !self.fb_hz.is_finite() || !self.noise_floor_db.is_finite() {
            return Err(SignalError::Parameter("rx"));
        }
        if !(0.0..TAU).contains(&self.phase_rad) {
            return Err(SignalError::Parameter("phase_rx"));
        }
        Ok(())
    }
}

/// Effective bias `fb_tx - fb_rx`, Hz.
pub fn effective_fb(tx: &TxParams, rx: &RxParams) -> f64 {
    tx.fb_hz - rx.fb_hz
}

/// Effective phase `theta_tx - theta_rx` wrapped into `[0, 2*pi)`.
pub fn effective_phase(tx: &TxParams, rx: &RxParams) -> f64 {
    (tx.phase_rad - rx.phase_rad).rem_euclid(TAU)
}

/// Uniformly sampled complex baseband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqTrace {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Wall-clock time of sample 0, ns.
    pub t0_ns: i64,
}

impl IqTrace {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self { samples, sample_rate, t0_ns: 0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Wall-clock time of sample `index`, rounded to the nearest ns.
    pub fn time_of_sample_ns(&self, index: usize) -> i64 {
        self.t0_ns + (index as f64 * 1e9 / self.sample_rate).round() as i64
    }

    pub fn slice(&self, range: Range<usize>) -> IqTrace {
        IqTrace {
            t0_ns: self.time_of_sample_ns(range.start),
            samples: self.samples[range].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Prepends `count` copies of zero, keeping `t0_ns` as the new sample 0.
    pub fn with_lead_in(&self, count: usize) -> IqTrace {
        let mut samples = vec![Complex64::new(0.0, 0.0); count];
        samples.extend_from_slice(&self.samples);
        IqTrace { samples, sample_rate: self.sample_rate, t0_ns: self.t0_ns }
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, gain: f64) -> IqTrace {
        IqTrace {
            samples: self.samples.iter().map(|z| z * gain).collect(),
            sample_rate: self.sample_rate,
            t0_ns: self.t0_ns,
        }
    }
}
