//! Frame-delay attack model.
//!
//! An eavesdropper records the victim frame, a collider corrupts it at the
//! gateway, and a replayer re-transmits the recording `tau` seconds later.
//! This module covers the collision timing windows, the SCR/RTM outcome map,
//! log-distance geometry with the vulnerable-area sweep, and waveform-level
//! collision and replay synthesis.

mod geometry;
mod outcome;
pub mod receiver;
mod waveform;
mod windows;

pub use geometry::{
    area_vs_distance, path_loss, scr_at, vulnerable_area, AreaMap, Cell, CellClass, CollisionScenario, GridSpec,
    PathLossModel, Position,
};
pub use outcome::{Outcome, OutcomeMap, EAVESDROP_SCR_DB, STEALTHY_RTM, STEALTHY_SCR_DB};
pub use waveform::{random_replay_phase, replay, synthesize_collision};
pub use windows::{classify_by_timing, lookup_windows, CollisionWindows, WindowTable};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("no collision windows for S={sf}, payload {payload} bytes")]
    NoWindows { sf: u8, payload: u32 },
    #[error("coincident positions")]
    Coincident,
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid resolution {0} m exceeds 5 m")]
    CoarseGrid(f64),
    #[error("sample rates differ: {0} vs {1}")]
    SampleRate(f64, f64),
}
