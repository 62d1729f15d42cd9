//! Preamble onset detection.
//!
//! Three detectors that need no tuning beyond defaults: an envelope-ratio
//! detector, a spectrogram template correlator keyed on the up/down junction
//! of the start-of-frame delimiter, and an autoregressive AIC change-point
//! picker. Plus the round-trip RMSD harness used to score them without a
//! shared clock.

mod aic;
mod corr;
mod env;
mod roundtrip;

pub use aic::{detect_aic, detect_aic_with, AicConfig, AicInput};
pub use corr::{detect_corr, hill_template};
pub use env::{detect_env, DEFAULT_CHUNK_LEN};
pub use roundtrip::{rmsd_roundtrip, RoundTripSample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::IqTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Detector {
    Env,
    Corr,
    Aic,
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Detector::Env => "ENV",
            Detector::Corr => "CORR",
            Detector::Aic => "AIC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetResult {
    pub detector: Detector,
    /// Index into the analysed trace; always `< trace.len()`.
    pub onset_sample: usize,
    pub onset_time_ns: i64,
    pub score: f64,
}

impl OnsetResult {
    fn new(trace: &IqTrace, detector: Detector, onset_sample: usize, score: f64) -> Self {
        Self { detector, onset_sample, onset_time_ns: trace.time_of_sample_ns(onset_sample), score }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OnsetError {
    #[error("no onset: {0}")]
    NoOnset(&'static str),
    #[error("trace of {len} samples shorter than required {min}")]
    TooShort { len: usize, min: usize },
    #[error("round-trip RMSD needs at least two samples")]
    NotEnoughSamples,
}

/// Runs the named detector with its defaults.
pub fn detect(detector: Detector, trace: &IqTrace, phy: &crate::signal::PhyParams) -> Result<OnsetResult, OnsetError> {
    match detector {
        Detector::Env => detect_env(trace, DEFAULT_CHUNK_LEN),
        Detector::Corr => detect_corr(trace, phy),
        Detector::Aic => detect_aic(trace),
    }
}
