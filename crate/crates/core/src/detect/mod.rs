//! Gateway-side defenses against frame delay.
//!
//! Three independent checks share one per-device profile: the relative
//! frequency bias must stay near its recent history, the bias must agree
//! with the temperature the device reports, and inter-frame intervals
//! must follow a schedule derived from a shared seed.

mod jitter;
mod pih;
mod store;
mod temperature;

pub use jitter::{consecutive_variation_rate, FbJitterModel};
pub use pih::{pih_max_interval, pih_next_interval, pih_verify, PihConfig, PihState};
pub use store::{write_verdict_event, ProfileStore, VerdictEvent};
pub use temperature::{
    check_temp_consistency, fit_temp_model, roc_curve, temperature_score, RocPoint, TempModel, TempSynth,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fb::FbEstimate;
use crate::signal::Bandwidth;
use crate::stats::median;

/// Working threshold for non-compensated crystals.
pub const DEFAULT_FB_THRESHOLD_HZ: f64 = 500.0;
/// Threshold preset for TCXO-grade devices.
pub const TCXO_FB_THRESHOLD_HZ: f64 = 250.0;
/// Accepted estimates whose median defines the history center.
pub const DEFAULT_HISTORY_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accept,
    ReplaySuspected,
    /// No history for the (S, W) pair; neither accepted nor flagged.
    Unprofiled,
    DelaySuspected,
    /// Accepted after lost frames, via the summed schedule.
    GapRecovered,
    TemperatureMismatch,
}

impl Verdict {
    pub fn is_alarm(self) -> bool {
        matches!(self, Verdict::ReplaySuspected | Verdict::DelaySuspected | Verdict::TemperatureMismatch)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "ACCEPT",
            Verdict::ReplaySuspected => "REPLAY_SUSPECTED",
            Verdict::Unprofiled => "UNPROFILED",
            Verdict::DelaySuspected => "DELAY_SUSPECTED",
            Verdict::GapRecovered => "GAP_RECOVERED",
            Verdict::TemperatureMismatch => "TEMPERATURE_MISMATCH",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("need at least {need} pairs, got {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("temperature spread {0} C is below the 2 C minimum")]
    TemperatureSpread(f64),
    #[error("temperature model slope {0} Hz/C is degenerate")]
    DegenerateModel(f64),
    #[error("profile has no temperature model")]
    NoTemperatureModel,
    #[error("observation carries no temperature reading")]
    NoTemperatureReading,
    #[error("profile has no interval-hopping configuration")]
    NoPih,
    #[error("counter gap {gap} exceeds the window of {window}; resynchronize")]
    ResyncRequired { gap: u64, window: u64 },
    #[error("observation belongs to device {got}, profile is {expected}")]
    DeviceMismatch { expected: String, got: String },
    #[error("store i/o: {0}")]
    Io(String),
    #[error("store line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbRecord {
    pub time_ns: i64,
    pub delta_hz: f64,
}

/// Accepted biases for one (S, W) pair, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbHistory {
    pub spreading_factor: u8,
    pub bandwidth: Bandwidth,
    pub records: VecDeque<FbRecord>,
}

impl FbHistory {
    /// Median of the newest `window` records.
    pub fn center(&self, window: usize) -> Option<f64> {
        let skip = self.records.len().saturating_sub(window);
        let recent: Vec<f64> = self.records.iter().skip(skip).map(|r| r.delta_hz).collect();
        (!recent.is_empty()).then(|| median(&recent))
    }

    fn insert(&mut self, record: FbRecord, capacity: usize) {
        let at = self.records.partition_point(|r| r.time_ns <= record.time_ns);
        self.records.insert(at, record);
        while self.records.len() > capacity {
            self.records.pop_front();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: String,
    pub fb_history: Vec<FbHistory>,
    fb_threshold_hz: f64,
    history_window: usize,
    pub temp_model: Option<TempModel>,
    pub pih: Option<PihState>,
}

impl DeviceProfile {
    pub fn new(device_id: impl Into<String>) -> Self {
        Self {
            device_id: device_id.into(),
            fb_history: Vec::new(),
            fb_threshold_hz: DEFAULT_FB_THRESHOLD_HZ,
            history_window: DEFAULT_HISTORY_WINDOW,
            temp_model: None,
            pih: None,
        }
    }

    pub fn with_threshold(mut self, threshold_hz: f64) -> Result<Self, DetectError> {
        if !(threshold_hz.is_finite() && threshold_hz > 0.0) {
            return Err(DetectError::Parameter("fb threshold must be positive"));
        }
        self.fb_threshold_hz = threshold_hz;
        Ok(self)
    }

    pub fn with_history_window(mut self, window: usize) -> Result<Self, DetectError> {
        if window == 0 {
            return Err(DetectError::Parameter("history window must be positive"));
        }
        self.history_window = window;
        Ok(self)
    }

    pub fn fb_threshold_hz(&self) -> f64 {
        self.fb_threshold_hz
    }

    pub fn history_window(&self) -> usize {
        self.history_window
    }

    pub fn history(&self, sf: u8, bandwidth: Bandwidth) -> Option<&FbHistory> {
        self.fb_history.iter().find(|h| h.spreading_factor == sf && h.bandwidth == bandwidth)
    }

    fn history_mut(&mut self, sf: u8, bandwidth: Bandwidth) -> &mut FbHistory {
        let at = self.fb_history.iter().position(|h| h.spreading_factor == sf && h.bandwidth == bandwidth);
        match at {
            Some(i) => &mut self.fb_history[i],
            None => {
                self.fb_history.push(FbHistory { spreading_factor: sf, bandwidth, records: VecDeque::new() });
                self.fb_history.last_mut().expect("just pushed")
            }
        }
    }

    /// Records a supervised profiling measurement without any check.
    pub fn enroll(&mut self, sf: u8, bandwidth: Bandwidth, time_ns: i64, delta_hz: f64) {
        let capacity = self.history_window;
        self.history_mut(sf, bandwidth).insert(FbRecord { time_ns, delta_hz }, capacity);
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.fb_threshold_hz.is_finite() && self.fb_threshold_hz > 0.0) {
            return Err(DetectError::Parameter("fb threshold must be positive"));
        }
        if self.history_window == 0 {
            return Err(DetectError::Parameter("history window must be positive"));
        }
        for h in &self.fb_history {
            if h.records.iter().zip(h.records.iter().skip(1)).any(|(a, b)| a.time_ns > b.time_ns) {
                return Err(DetectError::Parameter("fb history out of time order"));
            }
        }
        if let Some(pih) = &self.pih {
            pih.config.validate()?;
        }
        Ok(())
    }

    fn check_device(&self, obs: &FrameObservation) -> Result<(), DetectError> {
        if obs.device_id != self.device_id {
            return Err(DetectError::DeviceMismatch { expected: self.device_id.clone(), got: obs.device_id.clone() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObservation {
    pub device_id: String,
    /// Gateway wall clock at the preamble onset.
    pub rx_time_ns: i64,
    pub fb: FbEstimate,
    pub spreading_factor: u8,
    pub bandwidth: Bandwidth,
    pub temp_reading: Option<f64>,
    pub frame_counter: u64,
}

/// Compares the bias against the median of recent accepted biases.
/// Only accepted observations enter the history.
pub fn check_fb(profile: &mut DeviceProfile, obs: &FrameObservation) -> Result<Verdict, DetectError> {
    profile.check_device(obs)?;
    let window = profile.history_window;
    let center = match profile.history(obs.spreading_factor, obs.bandwidth).and_then(|h| h.center(window)) {
        Some(c) => c,
        None => return Ok(Verdict::Unprofiled),
    };
    if (obs.fb.delta_hz - center).abs() > profile.fb_threshold_hz {
        return Ok(Verdict::ReplaySuspected);
    }
    profile
        .history_mut(obs.spreading_factor, obs.bandwidth)
        .insert(FbRecord { time_ns: obs.rx_time_ns, delta_hz: obs.fb.delta_hz }, window);
    Ok(Verdict::Accept)
}
