//! Short-time power spectral density with a Kaiser window.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{IqTrace, PhyParams, SignalError};
use crate::dsp::kaiser;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramConfig {
    /// `None` selects `2^S`.
    pub window_len: Option<usize>,
    pub overlap: usize,
    pub kaiser_beta: f64,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self { window_len: None, overlap: 16, kaiser_beta: 8.0 }
    }
}

/// One PSD column per hop; bins in ascending frequency from `-fs/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// `psd[column][bin]`, power per Hz.
    pub psd: Vec<Vec<f64>>,
    pub freqs_hz: Vec<f64>,
    pub window_len: usize,
    pub overlap: usize,
    pub sample_rate: f64,
}

impl Spectrogram {
    pub fn hop(&self) -> usize {
        self.window_len - self.overlap
    }

    pub fn columns(&self) -> usize {
        self.psd.len()
    }

    /// First sample covered by `column`.
    pub fn column_start(&self, column: usize) -> usize {
        column * self.hop()
    }

    /// Centre of `column` in seconds from the first sample.
    pub fn column_time(&self, column: f64) -> f64 {
        (column * self.hop() as f64 + self.window_len as f64 / 2.0) / self.sample_rate
    }

    /// Index of the maximum-power bin in each column.
    pub fn ridge(&self) -> Vec<usize> {
        self.psd
            .iter()
            .map(|col| {
                col.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                    .0
            })
            .collect()
    }

    /// Bin whose centre frequency is nearest `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        let df = self.sample_rate / self.window_len as f64;
        let zero = self.window_len / 2;
        (zero as f64 + (freq_hz / df).round()).clamp(0.0, (self.window_len - 1) as f64) as usize
    }
}

/// Columns produced for a trace of `len` samples.
pub fn column_count(len: usize, window_len: usize, overlap: usize) -> usize {
    if len < window_len {
        0
    } else {
        (len - window_len) / (window_len - overlap) + 1
    }
}

pub fn spectrogram(trace: &IqTrace, phy: &PhyParams) -> Result<Spectrogram, SignalError> {
    spectrogram_with(trace, phy, &SpectrogramConfig::default())
}

pub fn spectrogram_with(trace: &IqTrace, phy: &PhyParams, cfg: &SpectrogramConfig) -> Result<Spectrogram, SignalError> {
    let win = cfg.window_len.unwrap_or(phy.chips() as usize);
    if win == 0 || cfg.overlap >= win {
        return Err(SignalError::Parameter("overlap must be below window length"));
    }
    if trace.len() < win {
        return Err(SignalError::TooShort { len: trace.len(), window: win });
    }
    let window = kaiser(win, cfg.kaiser_beta);
    let scale = 1.0 / (trace.sample_rate * window.iter().map(|w| w * w).sum::<f64>());
    let fft = FftPlanner::new().plan_fft_forward(win);
    let hop = win - cfg.overlap;
    let cols = column_count(trace.len(), win, cfg.overlap);
    let mut buf = vec![Complex64::new(0.0, 0.0); win];
    let mut psd = Vec::with_capacity(cols);
    for c in 0..cols {
        let start = c * hop;
        for (b, (x, w)) in buf.iter_mut().zip(trace.samples[start..start + win].iter().zip(&window)) {
            *b = x * w;
        }
        fft.process(&mut buf);
        // fftshift: bin k of the output is frequency (k - win/2) * fs / win.
        let col = (0..win).map(|k| buf[(k + win - win / 2) % win].norm_sqr() * scale).collect();
        psd.push(col);
    }
    let df = trace.sample_rate / win as f64;
    let freqs_hz = (0..win).map(|k| (k as f64 - (win / 2) as f64) * df).collect();
    Ok(Spectrogram { psd, freqs_hz, window_len: win, overlap: cfg.overlap, sample_rate: trace.sample_rate })
}
