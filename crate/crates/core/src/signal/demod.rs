//! Symbol-level dechirp demodulation on the exact symbol grid.

use num_complex::Complex64;

use super::{up_sweep_phase, IqTrace, PhyParams};
use crate::dsp::dft_at;

/// Multiplies by the conjugate of the unbiased symbol-0 up chirp and removes
/// `fb_hz`, leaving a tone per symbol.
pub fn dechirp(samples: &[Complex64], phy: &PhyParams, sample_rate: f64, fb_hz: f64) -> Vec<Complex64> {
    samples
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let tau = j as f64 / sample_rate;
            x * Complex64::from_polar(1.0, -up_sweep_phase(phy, tau) - std::f64::consts::TAU * fb_hz * tau)
        })
        .collect()
}

/// Matched-filter power for each symbol.
///
/// Symbol `k` dechirps to a tone at `k*W/2^S` until its wrap time
/// `(2^S - k)/W` and at `k*W/2^S - W` afterwards. Because `2*pi*W` times the
/// wrap time is a multiple of `2*pi`, the two partial sums add coherently
/// without a phase correction.
pub fn symbol_powers(chirp: &IqTrace, phy: &PhyParams, fb_hz: f64) -> Vec<f64> {
    let fs = chirp.sample_rate;
    let y = dechirp(&chirp.samples, phy, fs, fb_hz);
    let w = phy.bandwidth_hz();
    (0..phy.chips())
        .map(|k| {
            let f = k as f64 * phy.bin_width_hz();
            let wrap = (((phy.chips() - k) as f64 / w) * fs).ceil().min(y.len() as f64) as usize;
            let head = dft_at(&y[..wrap], f, fs);
            let tail_f = f - w;
            let tail = dft_at(&y[wrap..], tail_f, fs)
                * Complex64::from_polar(1.0, -std::f64::consts::TAU * tail_f * wrap as f64 / fs);
            (head + tail).norm_sqr()
        })
        .collect()
}

/// Most likely symbol and its folded power.
pub fn demod_symbol(chirp: &IqTrace, phy: &PhyParams, fb_hz: f64) -> (u32, f64) {
    symbol_powers(chirp, phy, fb_hz).into_iter().enumerate().fold((0u32, f64::NEG_INFINITY), |(bk, bp), (k, p)| {
        if p > bp {
            (k as u32, p)
        } else {
            (bk, bp)
        }
    })
}
