//! `lorats`: batch front end. Data goes to stdout, logs to stderr.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error or a trace
//! without its sidecar.

mod attack;
mod detect;
mod estimate;
mod gen;
mod repro;
mod timing;

use std::fmt;
use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lorats::signal::io::TraceIoError;
use lorats::{Bandwidth, PhyParams};

#[derive(Parser)]
#[command(name = "lorats", version, about = "LoRa frame-delay attack and defense toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one frame as a .cf32 trace with its sidecar.
    Gen(gen::GenArgs),
    /// Estimate the frequency bias of each trace (JSON lines).
    Estimate(estimate::EstimateArgs),
    /// Detect the preamble onset of each trace (JSON lines).
    Onset(estimate::OnsetArgs),
    /// Collision outcomes, vulnerable areas and replay synthesis.
    #[command(subcommand)]
    Attack(attack::AttackCommand),
    /// Device profiles and replay/delay verdicts.
    #[command(subcommand)]
    Detect(detect::DetectCommand),
    /// Regenerate a figure dataset as CSV.
    Repro(repro::ReproArgs),
    /// Timestamping and overhead arithmetic.
    #[command(subcommand)]
    Timing(timing::TimingCommand),
}

/// Invalid input found after argument parsing; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    let hz: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    Bandwidth::from_hz(hz).map_err(|_| "bandwidth must be 125000, 250000 or 500000".to_string())
}

#[derive(Args, Clone, Copy, Debug)]
pub struct PhyArgs {
    /// Spreading factor.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u8).range(6..=12))]
    pub sf: u8,
    /// Bandwidth, Hz.
    #[arg(long, default_value = "125000", value_parser = parse_bandwidth)]
    pub bw: Bandwidth,
    /// Channel centre frequency, Hz.
    #[arg(long, default_value_t = 869.75e6)]
    pub freq: f64,
}

impl PhyArgs {
    pub fn phy(&self) -> anyhow::Result<PhyParams> {
        PhyParams::new(self.sf, self.bw, self.freq).map_err(|e| usage(e.to_string()))
    }
}

/// Writes one JSON value per line to stdout.
pub fn emit_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("LORATS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("LORATS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the thread pool")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage_like = err.chain().any(|cause| {
        cause.is::<UsageError>()
            || matches!(cause.downcast_ref::<TraceIoError>(), Some(TraceIoError::MissingSidecar(_)))
    });
    if usage_like {
        2
    } else {
        1
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gen(args) => gen::run(args),
        Command::Estimate(args) => estimate::run_estimate(args),
        Command::Onset(args) => estimate::run_onset(args),
        Command::Attack(cmd) => attack::run(cmd),
        Command::Detect(cmd) => detect::run(cmd),
        Command::Repro(args) => repro::run(args),
        Command::Timing(cmd) => timing::run(cmd),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
