use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Subcommand};
use lorats::detect::{
    check_fb, check_temp_consistency, fit_temp_model, pih_verify, write_verdict_event, DetectError, DeviceProfile,
    FbRecord, FrameObservation, PihConfig, PihState, ProfileStore, Verdict, VerdictEvent,
};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::{emit_json, usage, PhyArgs};

#[derive(Subcommand)]
pub enum DetectCommand {
    /// Adds supervised bias measurements (JSON lines of `time_ns`, `delta_hz`).
    Enroll(EnrollArgs),
    /// Fits the bias-temperature line from `temp_c,fb_hz` CSV.
    FitTemp(FitTempArgs),
    /// Configures the interval-hopping schedule of a device.
    Pih(PihArgs),
    /// Checks observations (JSON lines) and prints one verdict event per check.
    Check(CheckArgs),
    /// Rewrites the store with one line per device.
    Compact(StoreArg),
}

#[derive(Args)]
pub struct StoreArg {
    /// Profile store (JSON lines, last line per device wins).
    #[arg(long)]
    store: PathBuf,
}

#[derive(Args)]
pub struct EnrollArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    device: String,
    #[command(flatten)]
    phy: PhyArgs,
    /// Alarm threshold on |bias - history center|, Hz.
    #[arg(long)]
    threshold: Option<f64>,
    /// Accepted biases kept per (S, W) pair.
    #[arg(long)]
    window: Option<usize>,
    records: PathBuf,
}

#[derive(Args)]
pub struct FitTempArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    device: String,
    pairs: PathBuf,
}

#[derive(Args)]
pub struct PihArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    device: String,
    /// 32-byte shared seed as 64 hex digits.
    #[arg(long)]
    seed_hex: String,
    #[arg(long, default_value_t = 60.0)]
    min_s: f64,
    #[arg(long, default_value_t = 250.0)]
    max_s: f64,
    /// Allowed deviation of a measured interval, ms.
    #[arg(long, default_value_t = 10.0)]
    tol_ms: f64,
    /// Largest counter gap recovered through the summed schedule.
    #[arg(long, default_value_t = 64)]
    replay_window: u64,
}

#[derive(Args)]
pub struct CheckArgs {
    #[command(flatten)]
    store: StoreArg,
    /// Alarm threshold on |estimated - reported| temperature, C.
    #[arg(long, default_value_t = 0.5)]
    temp_threshold: f64,
    observations: PathBuf,
}

pub fn run(cmd: DetectCommand) -> anyhow::Result<()> {
    match cmd {
        DetectCommand::Enroll(args) => enroll(args),
        DetectCommand::FitTemp(args) => fit_temp(args),
        DetectCommand::Pih(args) => pih(args),
        DetectCommand::Check(args) => check(args),
        DetectCommand::Compact(args) => {
            let mut store = open(&args)?;
            store.compact()?;
            emit_json(&json!({ "devices": store.devices().count(), "log_lines": store.log_lines() }))
        }
    }
}

fn open(arg: &StoreArg) -> anyhow::Result<ProfileStore> {
    ProfileStore::open(&arg.store).with_context(|| format!("opening {}", arg.store.display()))
}

fn read_json_lines<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let reader = BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(rows)
}

fn profile_or_new(store: &ProfileStore, device: &str) -> DeviceProfile {
    store.get(device).cloned().unwrap_or_else(|| DeviceProfile::new(device))
}

fn enroll(args: EnrollArgs) -> anyhow::Result<()> {
    let phy = args.phy.phy()?;
    let records: Vec<FbRecord> = read_json_lines(&args.records)?;
    let mut store = open(&args.store)?;
    let mut profile = profile_or_new(&store, &args.device);
    if let Some(t) = args.threshold {
        profile = profile.with_threshold(t).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(w) = args.window {
        profile = profile.with_history_window(w).map_err(|e| usage(e.to_string()))?;
    }
    for r in &records {
        profile.enroll(phy.spreading_factor(), phy.bandwidth(), r.time_ns, r.delta_hz);
    }
    let center =
        profile.history(phy.spreading_factor(), phy.bandwidth()).and_then(|h| h.center(profile.history_window()));
    store.put(profile)?;
    emit_json(&json!({ "device_id": args.device, "enrolled": records.len(), "center_hz": center }))
}

fn fit_temp(args: FitTempArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.pairs).with_context(|| format!("reading {}", args.pairs.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || usage(format!("{}:{}: expected temp_c,fb_hz", args.pairs.display(), i + 1));
        let (t, f) = line.split_once(',').ok_or_else(bad)?;
        pairs.push((t.trim().parse::<f64>().map_err(|_| bad())?, f.trim().parse::<f64>().map_err(|_| bad())?));
    }
    let model = fit_temp_model(&pairs)?;
    let mut store = open(&args.store)?;
    let mut profile = profile_or_new(&store, &args.device);
    profile.temp_model = Some(model.clone());
    store.put(profile)?;
    emit_json(&json!({ "device_id": args.device, "model": model }))
}

fn pih(args: PihArgs) -> anyhow::Result<()> {
    let secs_to_ns = |s: f64, name: &str| -> anyhow::Result<u64> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(usage(format!("{name} must be non-negative")));
        }
        Ok((s * 1e9).round() as u64)
    };
    // The hex form is the serialized form; reuse its decoder.
    let config: PihConfig = serde_json::from_value(json!({
        "seed": args.seed_hex,
        "min_interval_ns": secs_to_ns(args.min_s, "--min-s")?,
        "max_interval_ns": secs_to_ns(args.max_s, "--max-s")?,
        "deviation_tol_ns": secs_to_ns(args.tol_ms * 1e-3, "--tol-ms")?,
        "replay_window": args.replay_window,
    }))
    .map_err(|e| usage(format!("--seed-hex: {e}")))?;
    config.validate().map_err(|e| usage(e.to_string()))?;
    let mut store = open(&args.store)?;
    let mut profile = profile_or_new(&store, &args.device);
    profile.pih = Some(PihState::new(config));
    store.put(profile)?;
    emit_json(&json!({ "device_id": args.device, "pih": "configured" }))
}

fn event(obs: &FrameObservation, verdict: Verdict, detail: String) -> VerdictEvent {
    VerdictEvent { device_id: obs.device_id.clone(), rx_time_ns: obs.rx_time_ns, verdict, detail }
}

/// Runs every check the profile supports. Profiles are written back once,
/// after all observations.
fn check(args: CheckArgs) -> anyhow::Result<()> {
    let observations: Vec<FrameObservation> = read_json_lines(&args.observations)?;
    let mut store = open(&args.store)?;
    let mut touched: BTreeMap<String, DeviceProfile> = BTreeMap::new();
    let mut out = BufWriter::new(std::io::stdout().lock());
    for obs in &observations {
        let profile = match touched.get_mut(&obs.device_id) {
            Some(p) => p,
            None => match store.get(&obs.device_id) {
                Some(p) => touched.entry(obs.device_id.clone()).or_insert_with(|| p.clone()),
                None => {
                    write_verdict_event(&mut out, &event(obs, Verdict::Unprofiled, "no profile".into()))?;
                    continue;
                }
            },
        };
        let center =
            profile.history(obs.spreading_factor, obs.bandwidth).and_then(|h| h.center(profile.history_window()));
        let verdict = check_fb(profile, obs)?;
        let detail = match center {
            Some(c) => {
                format!("fb {:.1} Hz, center {c:.1} Hz, threshold {} Hz", obs.fb.delta_hz, profile.fb_threshold_hz())
            }
            None => format!(
                "fb {:.1} Hz, no history for S{} W{}",
                obs.fb.delta_hz,
                obs.spreading_factor,
                obs.bandwidth.hz()
            ),
        };
        write_verdict_event(&mut out, &event(obs, verdict, detail))?;

        if profile.temp_model.is_some() && obs.temp_reading.is_some() {
            let verdict = check_temp_consistency(profile, obs, args.temp_threshold)?;
            write_verdict_event(&mut out, &event(obs, verdict, "temperature".into()))?;
        }
        if profile.pih.is_some() {
            let (verdict, detail) = match pih_verify(profile, obs) {
                Ok(v) => (v, format!("interval, counter {}", obs.frame_counter)),
                Err(e @ DetectError::ResyncRequired { .. }) => (Verdict::Unprofiled, format!("interval: {e}")),
                Err(e) => return Err(e.into()),
            };
            write_verdict_event(&mut out, &event(obs, verdict, detail))?;
        }
    }
    out.flush()?;
    for profile in touched.into_values() {
        store.put(profile)?;
    }
    Ok(())
}
