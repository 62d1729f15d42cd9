//! Gateway-side timestamping without device clock synchronization.
//!
//! A record's time of interest is the preamble onset of the frame that
//! carries it, minus the elapsed time the device reports for it.
//! Propagation delay (microseconds) is neglected. All arithmetic is in
//! integer nanoseconds.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::onset::OnsetResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimestampError {
    #[error("elapsed {elapsed_ms} ms exceeds the {bound_ms} ms bound")]
    ElapsedBound { elapsed_ms: u32, bound_ms: u32 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
}

/// One sensor reading as sent in an uplink payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRecord {
    pub device_id: String,
    /// Time from acquisition to transmission, on the device clock.
    pub elapsed_ms: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamped {
    pub record: DataRecord,
    /// Gateway wall clock at acquisition: onset minus elapsed.
    pub timestamp_ns: i64,
}

/// Stamps each record against the frame onset; records whose elapsed
/// time exceeds `bound_ms` are rejected individually.
pub fn stamp(onset: &OnsetResult, records: &[DataRecord], bound_ms: u32) -> Vec<Result<Timestamped, TimestampError>> {
    records
        .iter()
        .map(|r| {
            if r.elapsed_ms > bound_ms {
                return Err(TimestampError::ElapsedBound { elapsed_ms: r.elapsed_ms, bound_ms });
            }
            Ok(Timestamped {
                record: r.clone(),
                timestamp_ns: onset.onset_time_ns - i64::from(r.elapsed_ms) * 1_000_000,
            })
        })
        .collect()
}

/// Writes `device_id,timestamp_ns,elapsed_ms` rows with a header.
pub fn write_csv<W: Write>(out: &mut W, stamped: &[Timestamped]) -> std::io::Result<()> {
    writeln!(out, "device_id,timestamp_ns,elapsed_ms")?;
    for s in stamped {
        writeln!(out, "{},{},{}", s.record.device_id, s.timestamp_ns, s.record.elapsed_ms)?;
    }
    Ok(())
}

/// Resynchronizations per hour needed to keep drift within the target:
/// `floor(3600 / (target / rate))`. Zero drift needs none.
pub fn sync_overhead(drift_ppm: f64, accuracy_target_ms: f64) -> Result<u32, TimestampError> {
    if !(drift_ppm.is_finite() && drift_ppm >= 0.0) {
        return Err(TimestampError::Parameter("drift rate must be non-negative"));
    }
    if !(accuracy_target_ms.is_finite() && accuracy_target_ms > 0.0) {
        return Err(TimestampError::Parameter("accuracy target must be positive"));
    }
    if drift_ppm == 0.0 {
        return Ok(0);
    }
    let period_s = accuracy_target_ms * 1e-3 / (drift_ppm * 1e-6);
    // Same whole-number guard as the interval bound.
    Ok((3600.0 / period_s * (1.0 + 1e-12)).floor() as u32)
}

/// Longest a record may wait on the device before its drift exceeds
/// `drift_bound_ms`, in seconds.
pub fn max_waiting(drift_ppm: f64, drift_bound_ms: f64) -> Result<f64, TimestampError> {
    if !(drift_ppm.is_finite() && drift_ppm > 0.0) {
        return Err(TimestampError::Parameter("drift rate must be positive"));
    }
    if !(drift_bound_ms.is_finite() && drift_bound_ms >= 0.0) {
        return Err(TimestampError::Parameter("drift bound must be non-negative"));
    }
    Ok(drift_bound_ms * 1e-3 / (drift_ppm * 1e-6))
}
