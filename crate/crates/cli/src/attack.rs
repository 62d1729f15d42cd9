use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Subcommand};
use lorats::attack::{
    classify_by_timing, random_replay_phase, replay, scr_at, vulnerable_area, CollisionScenario, GridSpec, OutcomeMap,
    PathLossModel, WindowTable,
};
use lorats::signal::io::{read_cf32, write_cf32};
use serde::Deserialize;
use serde_json::json;

use crate::{emit_json, usage};

#[derive(Subcommand)]
pub enum AttackCommand {
    /// Outcome report for a scenario file (one JSON object).
    Run(RunArgs),
    /// Victim positions classified on a grid, as `x,y,class` CSV.
    Area(AreaArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Writes the replayed victim trace here.
    #[arg(long, requires = "victim")]
    emit_replay: Option<PathBuf>,
    /// Recorded victim trace to replay.
    #[arg(long)]
    victim: Option<PathBuf>,
    /// Replay carrier phase, rad; drawn from --seed when omitted.
    #[arg(long, allow_hyphen_values = true)]
    replay_phase: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
pub struct AreaArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Cell edge, m (at most 5).
    #[arg(long)]
    resolution: Option<f64>,
    /// Half width of the square grid centred on the origin, m.
    #[arg(long)]
    half_width: Option<f64>,
    /// Prints only the area totals as JSON.
    #[arg(long)]
    summary: bool,
}

/// Timing inputs for the window-based outcome.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TimingSpec {
    spreading_factor: u8,
    payload_bytes: u32,
    lag_ms: f64,
    #[serde(default)]
    interpolate: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: CollisionScenario,
    #[serde(default)]
    path_loss: PathLossModel,
    #[serde(default)]
    timing: Option<TimingSpec>,
    #[serde(default)]
    grid: Option<GridSpec>,
}

fn load(path: &Path) -> anyhow::Result<ScenarioFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    file.scenario.validate().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    file.path_loss.validate().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(file)
}

pub fn run(cmd: AttackCommand) -> anyhow::Result<()> {
    match cmd {
        AttackCommand::Run(args) => run_scenario(args),
        AttackCommand::Area(args) => run_area(args),
    }
}

/// The timing outcome, when timing is given, is the headline outcome; the
/// (RTM, SCR) map outcome is reported alongside.
fn run_scenario(args: RunArgs) -> anyhow::Result<()> {
    let file = load(&args.scenario)?;
    let s = &file.scenario;
    let scr_gateway = scr_at(&s.gateway, s, &file.path_loss).context("gateway SCR")?;
    let scr_eavesdropper = scr_at(&s.eavesdropper, s, &file.path_loss).context("eavesdropper SCR")?;
    let map = OutcomeMap::default();
    let map_outcome = map.classify(s.rtm, scr_gateway);
    let timing = match &file.timing {
        Some(t) => {
            let table = if t.interpolate { WindowTable::sx1276().with_interpolation() } else { WindowTable::sx1276() };
            let windows = table.lookup(t.spreading_factor, t.payload_bytes)?;
            let outcome = classify_by_timing(t.lag_ms, &windows).map_err(|e| usage(e.to_string()))?;
            Some((windows, t.lag_ms, outcome))
        }
        None => None,
    };

    let replay_path = match (&args.emit_replay, &args.victim) {
        (Some(out), Some(victim)) => {
            let (trace, sidecar) = read_cf32(victim).with_context(|| format!("reading {}", victim.display()))?;
            let phase = args.replay_phase.unwrap_or_else(|| random_replay_phase(args.seed));
            let replayed = replay(&trace, s.replay_delay_s, s.replayer_fb_hz, phase)?;
            write_cf32(out, &replayed, sidecar.center_freq_hz)?;
            Some(json!({ "path": out, "phase_rad": phase, "t0_ns": replayed.t0_ns }))
        }
        _ => None,
    };

    emit_json(&json!({
        "outcome": timing.as_ref().map_or(map_outcome, |t| t.2),
        "map_outcome": map_outcome,
        "timing": timing.as_ref().map(|(w, lag, o)| json!({ "windows": w, "lag_ms": lag, "outcome": o })),
        "rtm": s.rtm,
        "scr_gateway_db": scr_gateway,
        "scr_eavesdropper_db": scr_eavesdropper,
        "stealthy": map.is_stealthy(s.rtm, scr_gateway),
        "eavesdrop_ok": scr_eavesdropper >= lorats::attack::EAVESDROP_SCR_DB,
        "replay_delay_s": s.replay_delay_s,
        "replayer_fb_hz": s.replayer_fb_hz,
        "replay": replay_path,
    }))
}

fn run_area(args: AreaArgs) -> anyhow::Result<()> {
    let file = load(&args.scenario)?;
    let mut grid = file.grid.unwrap_or_else(|| GridSpec::square(600.0, 5.0));
    if let Some(h) = args.half_width {
        grid = GridSpec { victim_alt: grid.victim_alt, ..GridSpec::square(h, grid.resolution_m) };
    }
    if let Some(r) = args.resolution {
        grid.resolution_m = r;
    }
    let area = vulnerable_area(&file.scenario, &file.path_loss, &grid).map_err(|e| usage(e.to_string()))?;
    if args.summary {
        return emit_json(&json!({
            "core_area_m2": area.core_area_m2,
            "ring_area_m2": area.ring_area_m2,
            "disk_area_m2": area.disk_area_m2,
            "cells": area.cells.len(),
        }));
    }
    let mut out = BufWriter::new(std::io::stdout().lock());
    writeln!(out, "x,y,class")?;
    for c in &area.cells {
        writeln!(out, "{},{},{}", c.x, c.y, c.class.as_str())?;
    }
    out.flush()?;
    Ok(())
}
