use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Subcommand};
use lorats::detect::pih_max_interval;
use lorats::fb::{doppler_fb, kmh_to_mps};
use lorats::onset::{detect_aic, Detector, OnsetResult};
use lorats::signal::io::read_cf32;
use lorats::timestamping::{max_waiting, stamp, sync_overhead, write_csv, DataRecord};
use serde_json::json;

use crate::{emit_json, usage};

#[derive(Subcommand)]
pub enum TimingCommand {
    /// Resynchronizations per hour that keep drift within the target.
    Overhead {
        #[arg(long, default_value_t = 40.0)]
        drift_ppm: f64,
        #[arg(long, default_value_t = 10.0)]
        target_ms: f64,
    },
    /// Longest a reading may wait before its drift exceeds the bound, s.
    MaxWaiting {
        #[arg(long, default_value_t = 40.0)]
        drift_ppm: f64,
        #[arg(long, default_value_t = 10.0)]
        bound_ms: f64,
    },
    /// Largest hopping interval whose drift stays within the tolerance, whole s.
    MaxInterval {
        #[arg(long, default_value_t = 40.0)]
        drift_ppm: f64,
        #[arg(long, default_value_t = 10.0)]
        tol_ms: f64,
    },
    /// Doppler bias of a moving transmitter, Hz.
    Doppler {
        #[arg(long)]
        speed_kmh: f64,
        #[arg(long, default_value_t = 869.75e6)]
        freq: f64,
    },
    /// Stamps data records against a frame onset and prints CSV.
    Stamp(StampArgs),
}

#[derive(Args)]
pub struct StampArgs {
    /// Records as JSON lines (`device_id`, `elapsed_ms`, `payload`).
    records: PathBuf,
    /// Frame onset on the gateway clock, ns.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "trace", required_unless_present = "trace")]
    onset_ns: Option<i64>,
    /// Trace whose AIC onset anchors the records.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Records waiting longer than this are rejected, ms.
    #[arg(long, default_value_t = 250_000)]
    bound_ms: u32,
}

pub fn run(cmd: TimingCommand) -> anyhow::Result<()> {
    match cmd {
        TimingCommand::Overhead { drift_ppm, target_ms } => {
            let sessions = sync_overhead(drift_ppm, target_ms).map_err(|e| usage(e.to_string()))?;
            emit_json(&json!({ "sessions_per_hour": sessions }))
        }
        TimingCommand::MaxWaiting { drift_ppm, bound_ms } => {
            let s = max_waiting(drift_ppm, bound_ms).map_err(|e| usage(e.to_string()))?;
            emit_json(&json!({ "seconds": s, "minutes": s / 60.0 }))
        }
        TimingCommand::MaxInterval { drift_ppm, tol_ms } => {
            let s = pih_max_interval(tol_ms * 1e-3, drift_ppm).map_err(|e| usage(e.to_string()))?;
            emit_json(&json!({ "seconds": s }))
        }
        TimingCommand::Doppler { speed_kmh, freq } => {
            emit_json(&json!({ "fb_hz": doppler_fb(kmh_to_mps(speed_kmh), freq) }))
        }
        TimingCommand::Stamp(args) => run_stamp(args),
    }
}

/// Accepted rows go to stdout; any rejected record makes the run fail
/// after the CSV is written.
fn run_stamp(args: StampArgs) -> anyhow::Result<()> {
    let onset = match (&args.trace, args.onset_ns) {
        (Some(path), _) => {
            let (trace, _) = read_cf32(path).with_context(|| format!("reading {}", path.display()))?;
            detect_aic(&trace).with_context(|| format!("onset of {}", path.display()))?
        }
        (None, Some(ns)) => OnsetResult { detector: Detector::Aic, onset_sample: 0, onset_time_ns: ns, score: 0.0 },
        (None, None) => unreachable!("clap requires one of --trace and --onset-ns"),
    };
    let text = std::fs::read_to_string(&args.records).with_context(|| format!("reading {}", args.records.display()))?;
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<DataRecord>(l)
                .map_err(|e| usage(format!("{}:{}: {e}", args.records.display(), i + 1)))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut accepted = Vec::new();
    let mut rejected = 0usize;
    for (record, result) in records.iter().zip(stamp(&onset, &records, args.bound_ms)) {
        match result {
            Ok(t) => accepted.push(t),
            Err(e) => {
                log::warn!("record from {}: {e}", record.device_id);
                rejected += 1;
            }
        }
    }
    write_csv(&mut BufWriter::new(std::io::stdout().lock()), &accepted)?;
    if rejected > 0 {
        bail!("{rejected} of {} records exceed the {} ms bound", records.len(), args.bound_ms);
    }
    Ok(())
}
