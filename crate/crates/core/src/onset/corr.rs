//! Spectrogram template correlation on the preamble/SFD junction.
//!
//! The last up chirp of the preamble climbs to `+W/2` and the first down
//! chirp falls back from it, drawing a hill in the spectrogram. The template
//! holds the second half of an up chirp and two down chirps; its best Pearson
//! match over time and a small grid of frequency offsets locates the junction.

use num_complex::Complex64;

use super::{Detector, OnsetError, OnsetResult};
use crate::signal::{
    gen_down_chirp, gen_up_chirp, spectrogram, IqTrace, PhyParams, RxParams, Spectrogram, TxParams, PREAMBLE_CHIRPS,
};

/// Minimum normalized correlation accepted as a junction.
pub const MIN_CORRELATION: f64 = 0.5;
/// Frequency offsets searched, in spectrogram bins either side of zero.
const MAX_BIN_SHIFT: i32 = 3;
/// Frequency steps per spectrogram bin.
const SUBBIN_STEPS: i32 = 4;

/// Hill template at bias `fb_hz`: samples and the junction's sample offset.
pub fn hill_template(phy: &PhyParams, sample_rate: f64, fb_hz: f64) -> (IqTrace, usize) {
    let tx = TxParams { fb_hz, ramp_fraction: 0.0, ..TxParams::default() };
    let rx = RxParams::default();
    let up = gen_up_chirp(phy, &tx, &rx, sample_rate).expect("valid template parameters");
    let down = gen_down_chirp(phy, &tx, &rx, sample_rate).expect("valid template parameters");
    let n = up.len();
    let start = n / 2;
    let mut samples: Vec<Complex64> = up.samples[start..].to_vec();
    samples.extend_from_slice(&down.samples);
    samples.extend_from_slice(&down.samples);
    (IqTrace::new(samples, sample_rate), n - start)
}

fn magnitude(s: &Spectrogram) -> Vec<Vec<f64>> {
    s.psd.iter().map(|c| c.iter().map(|v| v.sqrt()).collect()).collect()
}

/// Pearson correlation of `tmpl` against `img` columns `[col, col + tmpl.len())`,
/// restricted to `rows`.
fn pearson(img: &[Vec<f64>], tmpl: &[Vec<f64>], col: usize, rows: std::ops::Range<usize>) -> f64 {
    let count = (tmpl.len() * rows.len()) as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, t) in tmpl.iter().enumerate() {
        let c = &img[col + j];
        for r in rows.clone() {
            let (a, b) = (t[r], c[r]);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
        }
    }
    let cov = sxy - sx * sy / count;
    let vx = sxx - sx * sx / count;
    let vy = syy - sy * sy / count;
    if vx <= 0.0 || vy <= 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Onset from the best template match: junction minus eight chirp times.
pub fn detect_corr(trace: &IqTrace, phy: &PhyParams) -> Result<OnsetResult, OnsetError> {
    let fs = trace.sample_rate;
    let n = phy.chirp_samples(fs);
    let (probe, _) = hill_template(phy, fs, 0.0);
    if trace.len() < probe.len() {
        return Err(OnsetError::TooShort { len: trace.len(), min: probe.len() });
    }
    let img = magnitude(&spectrogram(trace, phy).map_err(|_| OnsetError::NoOnset("spectrogram"))?);
    let win = phy.chips() as usize;
    let hop = win - 16;
    let bin_hz = fs / win as f64;
    // Rows spanning the chirp band plus the searched offsets.
    let half_band = (phy.bandwidth_hz() / 2.0 / bin_hz).ceil() as usize + MAX_BIN_SHIFT as usize + 2;
    let rows = win / 2 - half_band.min(win / 2)..(win / 2 + half_band + 1).min(win);

    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut curves = Vec::new();
    for step in -MAX_BIN_SHIFT * SUBBIN_STEPS..=MAX_BIN_SHIFT * SUBBIN_STEPS {
        let fb = step as f64 * bin_hz / SUBBIN_STEPS as f64;
        let (tmpl_trace, _) = hill_template(phy, fs, fb);
        let tmpl = magnitude(&spectrogram(&tmpl_trace, phy).expect("template longer than window"));
        if tmpl.len() > img.len() {
            return Err(OnsetError::TooShort { len: trace.len(), min: tmpl_trace.len() });
        }
        let curve: Vec<f64> = (0..=img.len() - tmpl.len()).map(|c| pearson(&img, &tmpl, c, rows.clone())).collect();
        for (c, &v) in curve.iter().enumerate() {
            if v > best.0 {
                best = (v, c, curves.len());
            }
        }
        curves.push(curve);
    }
    let (score, col, which) = best;
    if score < MIN_CORRELATION {
        return Err(OnsetError::NoOnset("no preamble/SFD junction"));
    }
    let curve = &curves[which];
    let frac = if col > 0 && col + 1 < curve.len() {
        let (l, m, r) = (curve[col - 1], curve[col], curve[col + 1]);
        let denom = l - 2.0 * m + r;
        if denom < 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let junction = (col as f64 + frac) * hop as f64 + (n - n / 2) as f64;
    let onset = junction - (PREAMBLE_CHIRPS * n) as f64;
    if onset < 0.0 {
        return Err(OnsetError::NoOnset("junction earlier than a full preamble"));
    }
    let onset = (onset.round() as usize).min(trace.len() - 1);
    Ok(OnsetResult::new(trace, Detector::Corr, onset, score))
}
