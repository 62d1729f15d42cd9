//! `.cf32` files: interleaved little-endian `f32` I/Q with a JSON sidecar.
//!
//! `capture.cf32` pairs with `capture.json`:
//! `{"sample_rate_hz": .., "center_freq_hz": .., "t0_ns": ..}`.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::IqTrace;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),
    #[error("malformed sidecar {path}: {source}")]
    Sidecar { path: PathBuf, source: serde_json::Error },
    #[error("{path}: byte length {len} is not a multiple of 8")]
    Truncated { path: PathBuf, len: usize },
    #[error("{path}: sample rate must be positive and finite")]
    SampleRate { path: PathBuf },
    #[error("{path}: non-finite sample at index {index}")]
    NonFinite { path: PathBuf, index: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub t0_ns: i64,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

/// Writes the `.cf32` body and its sidecar. Samples are narrowed to `f32`.
pub fn write_cf32(path: &Path, trace: &IqTrace, center_freq_hz: f64) -> Result<(), TraceIoError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for z in &trace.samples {
        out.write_all(&(z.re as f32).to_le_bytes())?;
        out.write_all(&(z.im as f32).to_le_bytes())?;
    }
    out.flush()?;
    let meta = Sidecar { sample_rate_hz: trace.sample_rate, center_freq_hz, t0_ns: trace.t0_ns };
    let json = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

/// Reads a trace; a file without sidecar is rejected.
pub fn read_cf32(path: &Path) -> Result<(IqTrace, Sidecar), TraceIoError> {
    let side = sidecar_path(path);
    if !side.is_file() {
        return Err(TraceIoError::MissingSidecar(side));
    }
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(&side)?)
        .map_err(|source| TraceIoError::Sidecar { path: side.clone(), source })?;
    if !(meta.sample_rate_hz.is_finite() && meta.sample_rate_hz > 0.0) {
        return Err(TraceIoError::SampleRate { path: side });
    }
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(TraceIoError::Truncated { path: path.to_owned(), len: bytes.len() });
    }
    let mut samples = Vec::with_capacity(bytes.len() / 8);
    for (index, chunk) in bytes.chunks_exact(8).enumerate() {
        let re = f32::from_le_bytes(chunk[0..4].try_into().expect("4-byte slice"));
        let im = f32::from_le_bytes(chunk[4..8].try_into().expect("4-byte slice"));
        if !(re.is_finite() && im.is_finite()) {
            return Err(TraceIoError::NonFinite { path: path.to_owned(), index });
        }
        samples.push(Complex64::new(re as f64, im as f64));
    }
    Ok((IqTrace { samples, sample_rate: meta.sample_rate_hz, t0_ns: meta.t0_ns }, meta))
}
