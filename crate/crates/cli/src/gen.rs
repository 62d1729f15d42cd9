use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::Args;
use lorats::signal::{add_awgn, gen_frame, io::write_cf32};
use lorats::{RxParams, TxParams, DEFAULT_SAMPLE_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{emit_json, usage, PhyArgs};

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    phy: PhyArgs,
    /// Frequency bias, Hz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    fb: f64,
    /// Carrier phase, rad; drawn from the seed when omitted.
    #[arg(long)]
    phase: Option<f64>,
    /// Per-sample SNR over the frame, dB; noiseless when omitted.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated payload symbols; eight drawn from the seed when omitted.
    #[arg(long, value_delimiter = ',')]
    payload: Option<Vec<u32>>,
    /// Silent samples before the frame.
    #[arg(long, default_value_t = 4000)]
    lead_in: usize,
    /// Share of chirp 1 under the linear amplitude ramp.
    #[arg(long, default_value_t = 0.25)]
    ramp: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
    /// Wall clock of sample 0, ns.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    t0_ns: i64,
    /// Output `.cf32` path; the sidecar goes next to it.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn run(args: GenArgs) -> anyhow::Result<()> {
    let phy = args.phy.phy()?;
    if !(0.0..=1.0).contains(&args.ramp) {
        return Err(usage("--ramp must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let phase = args.phase.unwrap_or_else(|| rng.random_range(0.0..TAU));
    let payload = match args.payload {
        Some(p) => p,
        None => (0..8).map(|_| rng.random_range(0..phy.chips())).collect(),
    };
    let noise_seed: u64 = rng.random();
    let tx = TxParams { ramp_fraction: args.ramp, ..TxParams::new(args.fb, phase, 2.0) };
    let mut trace = gen_frame(&phy, &tx, &RxParams::default(), &payload, args.sample_rate)
        .map_err(|e| usage(e.to_string()))?
        .with_lead_in(args.lead_in);
    trace.t0_ns = args.t0_ns;
    if let Some(snr) = args.snr {
        trace = add_awgn(&trace, snr, noise_seed)?;
    }
    write_cf32(&args.out, &trace, phy.center_freq_hz)?;
    emit_json(&json!({
        "path": args.out,
        "samples": trace.len(),
        "onset_sample": args.lead_in,
        "onset_time_ns": trace.time_of_sample_ns(args.lead_in),
        "fb_hz": args.fb,
        "phase_rad": phase,
        "snr_db": args.snr,
        "payload": payload,
    }))
}
