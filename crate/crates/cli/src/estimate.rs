use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use lorats::fb::{estimate_fb_fft, estimate_fb_linreg, estimate_fb_lsq, second_chirp, LsqConfig};
use lorats::onset::{detect, Detector};
use lorats::signal::io::read_cf32;
use serde_json::json;

use crate::{emit_json, PhyArgs};

#[derive(Clone, Copy, ValueEnum)]
pub enum Method {
    Fft,
    Linreg,
    Lsq,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DetectorArg {
    Env,
    Corr,
    Aic,
}

impl From<DetectorArg> for Detector {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Env => Detector::Env,
            DetectorArg::Corr => Detector::Corr,
            DetectorArg::Aic => Detector::Aic,
        }
    }
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    phy: PhyArgs,
    #[arg(long, value_enum, default_value_t = Method::Lsq)]
    method: Method,
    /// Frame onset sample; detected with --detector when omitted.
    #[arg(long)]
    onset_sample: Option<usize>,
    #[arg(long, value_enum, default_value_t = DetectorArg::Aic)]
    detector: DetectorArg,
    /// Seed of the least-squares search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

#[derive(Args)]
pub struct OnsetArgs {
    #[command(flatten)]
    phy: PhyArgs,
    #[arg(long, value_enum, default_value_t = DetectorArg::Aic)]
    detector: DetectorArg,
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

/// Estimates on preamble chirp 2, whose amplitude has settled.
pub fn run_estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let phy = args.phy.phy()?;
    for path in &args.traces {
        let (trace, _) = read_cf32(path).with_context(|| format!("reading {}", path.display()))?;
        let onset = match args.onset_sample {
            Some(s) => s,
            None => {
                detect(args.detector.into(), &trace, &phy)
                    .with_context(|| format!("onset of {}", path.display()))?
                    .onset_sample
            }
        };
        let chirp = second_chirp(&trace, onset, &phy).with_context(|| format!("chirp 2 of {}", path.display()))?;
        let estimate = match args.method {
            Method::Fft => estimate_fb_fft(&chirp, &phy),
            Method::Linreg => estimate_fb_linreg(&chirp, &phy).map(|fit| fit.estimate),
            Method::Lsq => estimate_fb_lsq(&chirp, &phy, &LsqConfig { seed: args.seed, ..LsqConfig::default() }),
        }
        .with_context(|| format!("estimating {}", path.display()))?;
        let mut row = serde_json::to_value(&estimate)?;
        row["trace"] = json!(path);
        row["onset_sample"] = json!(onset);
        emit_json(&row)?;
    }
    Ok(())
}

pub fn run_onset(args: OnsetArgs) -> anyhow::Result<()> {
    let phy = args.phy.phy()?;
    for path in &args.traces {
        let (trace, _) = read_cf32(path).with_context(|| format!("reading {}", path.display()))?;
        let result =
            detect(args.detector.into(), &trace, &phy).with_context(|| format!("onset of {}", path.display()))?;
        let mut row = serde_json::to_value(result)?;
        row["trace"] = json!(path);
        emit_json(&row)?;
    }
    Ok(())
}
