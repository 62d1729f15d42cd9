//! Chirp and frame synthesis.
//!
//! Every chirp is rendered on its own local clock `tau = j / fs`; the phase at
//! the first sample of chirp `k+1` equals the phase chirp `k` would reach at
//! `tau = n / fs`, so concatenated chirps have no phase jumps.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::{effective_fb, effective_phase, IqTrace, PhyParams, RxParams, SignalError, TxParams};

/// Number of preamble up chirps.
pub const PREAMBLE_CHIRPS: usize = 8;
/// Whole down chirps in the start-of-frame delimiter, followed by a quarter.
pub const SFD_WHOLE_CHIRPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sweep {
    Up { symbol: u32 },
    Down,
}

/// Sweep-only phase (no bias, no offset) at local time `tau`.
fn sweep_phase(phy: &PhyParams, sweep: Sweep, tau: f64) -> f64 {
    let w = phy.bandwidth_hz();
    let rate = phy.sweep_rate();
    match sweep {
        Sweep::Up { symbol } => {
            let f0 = -w / 2.0 + symbol as f64 * phy.bin_width_hz();
            let mut phase = TAU * (f0 * tau + 0.5 * rate * tau * tau);
            let wrap_at = (phy.chips() - symbol) as f64 / w;
            if tau >= wrap_at {
                phase -= TAU * w * (tau - wrap_at);
            }
            phase
        }
        Sweep::Down => TAU * (w / 2.0 * tau - 0.5 * rate * tau * tau),
    }
}

/// Phase of the ideal unbiased up chirp (symbol 0) at local time `tau`.
///
/// Equals `pi*W^2/2^S * tau^2 - pi*W*tau`.
pub fn up_sweep_phase(phy: &PhyParams, tau: f64) -> f64 {
    let w = phy.bandwidth_hz();
    PI * phy.sweep_rate() * tau * tau - PI * w * tau
}

struct Renderer<'a> {
    phy: &'a PhyParams,
    fs: f64,
    fb: f64,
    half_amp: f64,
    phase: f64,
    out: Vec<Complex64>,
}

impl Renderer<'_> {
    fn chirp(&mut self, sweep: Sweep, len: usize, ramp_len: usize) {
        for j in 0..len {
            let tau = j as f64 / self.fs;
            let phase = sweep_phase(self.phy, sweep, tau) + TAU * self.fb * tau + self.phase;
            let gain = if j < ramp_len { j as f64 / ramp_len as f64 } else { 1.0 };
            self.out.push(Complex64::from_polar(self.half_amp * gain, phase));
        }
        let tau_end = len as f64 / self.fs;
        self.phase = (self.phase + sweep_phase(self.phy, sweep, tau_end) + TAU * self.fb * tau_end).rem_euclid(TAU);
    }
}

fn renderer<'a>(phy: &'a PhyParams, tx: &TxParams, rx: &RxParams, fs: f64) -> Result<Renderer<'a>, SignalError> {
    phy.check_rate(fs)?;
    tx.validate()?;
    rx.validate()?;
    Ok(Renderer {
        phy,
        fs,
        fb: effective_fb(tx, rx),
        half_amp: tx.amplitude / 2.0,
        phase: effective_phase(tx, rx),
        out: Vec::new(),
    })
}

/// One constant-amplitude up chirp of `round(fs * 2^S / W)` samples.
pub fn gen_up_chirp(phy: &PhyParams, tx: &TxParams, rx: &RxParams, sample_rate: f64) -> Result<IqTrace, SignalError> {
    gen_up_chirp_symbol(phy, tx, rx, 0, sample_rate)
}

/// One up chirp cyclically shifted to encode `symbol`.
pub fn gen_up_chirp_symbol(
    phy: &PhyParams,
    tx: &TxParams,
    rx: &RxParams,
    symbol: u32,
    sample_rate: f64,
) -> Result<IqTrace, SignalError> {
    check_symbol(phy, symbol)?;
    let mut r = renderer(phy, tx, rx, sample_rate)?;
    r.chirp(Sweep::Up { symbol }, phy.chirp_samples(sample_rate), 0);
    Ok(IqTrace::new(r.out, sample_rate))
}

/// One constant-amplitude down chirp, sweeping `+W/2` to `-W/2`.
pub fn gen_down_chirp(phy: &PhyParams, tx: &TxParams, rx: &RxParams, sample_rate: f64) -> Result<IqTrace, SignalError> {
    let mut r = renderer(phy, tx, rx, sample_rate)?;
    r.chirp(Sweep::Down, phy.chirp_samples(sample_rate), 0);
    Ok(IqTrace::new(r.out, sample_rate))
}

fn check_symbol(phy: &PhyParams, symbol: u32) -> Result<(), SignalError> {
    if symbol >= phy.chips() {
        return Err(SignalError::Symbol { symbol, limit: phy.chips() });
    }
    Ok(())
}

/// Sample-index layout of a synthesized frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub chirp_len: usize,
    pub quarter_len: usize,
    pub payload_len: usize,
}

impl FrameLayout {
    pub fn new(phy: &PhyParams, sample_rate: f64, payload_len: usize) -> Self {
        let chirp_len = phy.chirp_samples(sample_rate);
        let quarter_len = (chirp_len as f64 / 4.0).round() as usize;
        Self { chirp_len, quarter_len, payload_len }
    }

    /// First sample of preamble chirp `i` (0-based).
    pub fn preamble_start(&self, i: usize) -> usize {
        i * self.chirp_len
    }

    /// First sample of the first down chirp; the up/down junction.
    pub fn sfd_start(&self) -> usize {
        PREAMBLE_CHIRPS * self.chirp_len
    }

    pub fn payload_start(&self) -> usize {
        self.sfd_start() + SFD_WHOLE_CHIRPS * self.chirp_len + self.quarter_len
    }

    pub fn symbol_start(&self, k: usize) -> usize {
        self.payload_start() + k * self.chirp_len
    }

    /// `(10 + payload) * n + round(n / 4)`.
    pub fn total_len(&self) -> usize {
        self.symbol_start(self.payload_len)
    }
}

/// Preamble, start-of-frame delimiter and payload symbols.
///
/// Chirp 1 carries a linear amplitude ramp over `tx.ramp_fraction` of its
/// samples; all other chirps have constant amplitude `A/2`.
pub fn gen_frame(
    phy: &PhyParams,
    tx: &TxParams,
    rx: &RxParams,
    payload: &[u32],
    sample_rate: f64,
) -> Result<IqTrace, SignalError> {
    for &s in payload {
        check_symbol(phy, s)?;
    }
    let layout = FrameLayout::new(phy, sample_rate, payload.len());
    let mut r = renderer(phy, tx, rx, sample_rate)?;
    r.out.reserve(layout.total_len());
    let n = layout.chirp_len;
    let ramp_len = (tx.ramp_fraction * n as f64).round() as usize;
    for i in 0..PREAMBLE_CHIRPS {
        r.chirp(Sweep::Up { symbol: 0 }, n, if i == 0 { ramp_len } else { 0 });
    }
    for _ in 0..SFD_WHOLE_CHIRPS {
        r.chirp(Sweep::Down, n, 0);
    }
    r.chirp(Sweep::Down, layout.quarter_len, 0);
    for &symbol in payload {
        r.chirp(Sweep::Up { symbol }, n, 0);
    }
    debug_assert_eq!(r.out.len(), layout.total_len());
    Ok(IqTrace::new(r.out, sample_rate))
}
