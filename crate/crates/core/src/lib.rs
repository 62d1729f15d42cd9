//! LoRa chirp-spread-spectrum timing security toolkit.
//!
//! Synthetic I/Q generation, preamble onset detection, frequency-bias
//! estimation, frame-delay attack simulation and the matching defenses.
//! Every operation is a pure function of its inputs; randomness always
//! flows from an explicit seed.

pub mod attack;
pub mod detect;
pub mod dsp;
pub mod fb;
pub mod onset;
pub mod repro;
pub mod signal;
pub mod stats;
pub mod timestamping;

pub use signal::{Bandwidth, IqTrace, PhyParams, RxParams, TxParams, DEFAULT_SAMPLE_RATE};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
