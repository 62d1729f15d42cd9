//! Oracle gateway receiver for superimposed frames.
//!
//! Both frame timings and biases are known. Peak dechirp powers on windows
//! free of the other frame give the measured SCR. A collision preamble that
//! starts inside the lock window (the first `0.4` of the victim frame) with
//! power within the stealthy band makes the receiver drop the frame silently;
//! a much stronger one captures the receiver. Every other case is settled by
//! demodulating symbols and comparing them to the transmitted payload.

use serde::{Deserialize, Serialize};

use super::{Outcome, OutcomeMap};
use crate::signal::demod::{demod_symbol, symbol_powers};
use crate::signal::{FrameLayout, IqTrace, PhyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameInfo {
    /// First sample of the frame in the received trace.
    pub start: usize,
    pub fb_hz: f64,
    pub payload: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decoded {
    Victim,
    Collision,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    pub outcome: Outcome,
    pub decoded: Option<Decoded>,
    pub rtm: f64,
    pub scr_db: f64,
}

fn window(trace: &IqTrace, start: usize, len: usize) -> Option<IqTrace> {
    (start + len <= trace.len()).then(|| trace.slice(start..start + len))
}

fn peak_power(trace: &IqTrace, phy: &PhyParams, start: usize, len: usize, fb: f64) -> Option<f64> {
    window(trace, start, len).map(|w| symbol_powers(&w, phy, fb).into_iter().fold(0.0, f64::max))
}

fn payload_ok(trace: &IqTrace, phy: &PhyParams, frame: &FrameInfo, layout: &FrameLayout) -> bool {
    frame.payload.iter().enumerate().all(|(k, &sym)| {
        window(trace, frame.start + layout.symbol_start(k), layout.chirp_len)
            .is_some_and(|w| demod_symbol(&w, phy, frame.fb_hz).0 == sym)
    })
}

/// Receives `trace` holding `victim` and a later `collision` frame.
pub fn receive(
    trace: &IqTrace,
    phy: &PhyParams,
    victim: &FrameInfo,
    collision: &FrameInfo,
    map: &OutcomeMap,
) -> Reception {
    let fs = trace.sample_rate;
    let lv = FrameLayout::new(phy, fs, victim.payload.len());
    let lc = FrameLayout::new(phy, fs, collision.payload.len());
    let n = lv.chirp_len;
    let victim_end = victim.start + lv.total_len();
    let lag = collision.start.saturating_sub(victim.start);
    let rtm = lag as f64 / lv.total_len() as f64;

    // Victim power: preamble chirps ending before the collision starts.
    let clean_victim: Vec<f64> = (0..crate::signal::PREAMBLE_CHIRPS)
        .map(|i| victim.start + lv.preamble_start(i))
        .filter(|&s| s + n <= collision.start)
        .filter_map(|s| peak_power(trace, phy, s, n, victim.fb_hz))
        .collect();
    // Collision power: its symbols after the victim has ended.
    let clean_collision: Vec<f64> = (0..collision.payload.len())
        .map(|k| collision.start + lc.symbol_start(k))
        .filter(|&s| s >= victim_end)
        .filter_map(|s| peak_power(trace, phy, s, n, collision.fb_hz))
        .collect();
    let pv = clean_victim.iter().cloned().fold(0.0, f64::max);
    let pc = clean_collision.iter().cloned().fold(0.0, f64::max);
    let scr_db = 10.0 * (pv / pc).log10();

    let victim_ok = || payload_ok(trace, phy, victim, &lv);
    let collision_ok = || payload_ok(trace, phy, collision, &lc);
    let band = map.scr_band_db;
    let (outcome, decoded) = if collision.start >= victim_end {
        match (victim_ok(), collision_ok()) {
            (true, true) => (Outcome::BothReceived, Some(Decoded::Both)),
            (true, false) => (Outcome::VictimReceived, Some(Decoded::Victim)),
            (false, true) => (Outcome::CollisionReceived, Some(Decoded::Collision)),
            (false, false) => (Outcome::BadFrame, None),
        }
    } else if rtm < map.stealthy_rtm && scr_db < -band {
        if collision_ok() {
            (Outcome::CollisionReceived, Some(Decoded::Collision))
        } else {
            (Outcome::BadFrame, None)
        }
    } else if rtm < map.stealthy_rtm && scr_db <= band {
        (Outcome::Stealthy, None)
    } else if victim_ok() {
        (Outcome::VictimReceived, Some(Decoded::Victim))
    } else {
        (Outcome::BadFrame, None)
    };
    Reception { outcome, decoded, rtm, scr_db }
}
