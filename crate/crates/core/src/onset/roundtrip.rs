use serde::{Deserialize, Serialize};

use super::OnsetError;

/// Measured round-trip time minus the known turnaround and propagation, s.
///
/// Sums two transmit-side and two receive-side detection errors, so it may be
/// negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSample {
    pub delta_s: f64,
}

/// `RMSD(onset error) = RMSD(delta) / 2` for four i.i.d. error terms per delta.
pub fn rmsd_roundtrip(deltas: &[RoundTripSample]) -> Result<f64, OnsetError> {
    if deltas.len() < 2 {
        return Err(OnsetError::NotEnoughSamples);
    }
    if deltas.iter().any(|d| !d.delta_s.is_finite()) {
        return Err(OnsetError::NoOnset("non-finite round-trip sample"));
    }
    let ms = deltas.iter().map(|d| d.delta_s * d.delta_s).sum::<f64>() / deltas.len() as f64;
    Ok(ms.sqrt() / 2.0)
}
