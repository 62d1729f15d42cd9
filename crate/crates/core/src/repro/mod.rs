//! Deterministic desk-scale datasets behind the evaluation figures.
//!
//! Every dataset is a CSV string fully determined by [`ReproConfig`].
//! Trials run in parallel but each draws from its own ChaCha stream keyed
//! by `(seed, stream)`, and rows are emitted in a fixed order, so output
//! bytes do not depend on the thread count.

use std::f64::consts::TAU;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::receiver::{receive, FrameInfo};
use crate::attack::{
    area_vs_distance, synthesize_collision, AttackError, CollisionScenario, GridSpec, OutcomeMap, PathLossModel,
};
use crate::detect::{consecutive_variation_rate, FbJitterModel};
use crate::fb::{estimate_fb_linreg, estimate_fb_lsq, FbError, LsqConfig};
use crate::onset::{detect_aic, rmsd_roundtrip, OnsetError, RoundTripSample};
use crate::signal::{add_awgn, gen_frame, gen_up_chirp, PhyParams, RxParams, SignalError, TxParams};
use crate::stats::{mean, percentile};

pub const FIGURES: [&str; 6] = ["fig4", "fig5", "fig12", "fig13a", "fig13b", "fig17"];

#[derive(Debug, Error)]
pub enum ReproError {
    #[error("unknown figure {0:?}")]
    UnknownFigure(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Onset(#[from] OnsetError),
    #[error(transparent)]
    Fb(#[from] FbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproConfig {
    pub seed: u64,
    /// Monte-Carlo trials per sweep point.
    pub trials: usize,
    pub sample_rate: f64,
}

impl Default for ReproConfig {
    fn default() -> Self {
        Self { seed: 1, trials: 20, sample_rate: crate::DEFAULT_SAMPLE_RATE }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run(figure: &str, cfg: &ReproConfig) -> Result<String, ReproError> {
    match figure {
        "fig4" => fig4(cfg),
        "fig5" => fig5(cfg),
        "fig12" => fig12(cfg),
        "fig13a" => fig13(cfg, FbMethod::Linreg),
        "fig13b" => fig13(cfg, FbMethod::Lsq),
        "fig17" => Ok(fig17(cfg)),
        other => Err(ReproError::UnknownFigure(other.to_string())),
    }
}

pub const FIG4_RTM: [f64; 5] = [0.1, 0.2, 0.3, 0.5, 0.7];
pub const FIG4_SCR_DB: [f64; 5] = [-12.0, -9.0, 0.0, 9.0, 12.0];

/// Outcome map against the waveform oracle receiver on the RTM x SCR grid.
pub fn fig4(cfg: &ReproConfig) -> Result<String, ReproError> {
    let phy = PhyParams::eu868_sf7();
    let fs = cfg.sample_rate;
    let mut rng = stream_rng(cfg.seed, 0);
    let victim_payload: Vec<u32> = (0..16).map(|_| rng.random_range(0..128)).collect();
    let collision_payload: Vec<u32> = (0..16).map(|_| rng.random_range(0..128)).collect();
    let (victim_fb, collision_fb) = (-20e3, -12.3e3);
    let victim = gen_frame(
        &phy,
        &TxParams::new(victim_fb, rng.random_range(0.0..TAU), 2.0),
        &RxParams::default(),
        &victim_payload,
        fs,
    )?;
    let collision = gen_frame(
        &phy,
        &TxParams::new(collision_fb, rng.random_range(0.0..TAU), 2.0),
        &RxParams::default(),
        &collision_payload,
        fs,
    )?;
    let map = OutcomeMap::default();
    let cells: Vec<(f64, f64)> = FIG4_RTM.iter().flat_map(|&r| FIG4_SCR_DB.iter().map(move |&s| (r, s))).collect();
    let rows: Vec<Result<String, ReproError>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(rtm, scr))| {
            let sum = synthesize_collision(&victim, &collision, scr, rtm)?;
            let sum = add_awgn(&sum, 20.0, stream_rng(cfg.seed, 1 + i as u64).random())?;
            let offset = (rtm * victim.len() as f64).round() as usize;
            let rx = receive(
                &sum,
                &phy,
                &FrameInfo { start: 0, fb_hz: victim_fb, payload: victim_payload.clone() },
                &FrameInfo { start: offset, fb_hz: collision_fb, payload: collision_payload.clone() },
                &map,
            );
            Ok(format!("{rtm},{scr},{},{},{:.3}", map.classify(rtm, scr), rx.outcome, rx.scr_db))
        })
        .collect();
    let mut out = String::from("rtm,scr_db,map_outcome,receiver_outcome,measured_scr_db\n");
    for row in rows {
        out.push_str(&row?);
        out.push('\n');
    }
    Ok(out)
}

pub const FIG5_COLLIDER_DBM: [f64; 3] = [2.0, 5.0, 8.0];

/// Eavesdropper-gateway distances of the area sweep, m.
pub fn fig5_distances() -> Vec<f64> {
    (3..=60).map(|k| k as f64 * 25.0).collect()
}

/// Core vulnerable area against eavesdropper distance per collider power.
pub fn fig5(_cfg: &ReproConfig) -> Result<String, ReproError> {
    let model = PathLossModel::default();
    let grid = GridSpec::square(300.0, 5.0);
    let distances = fig5_distances();
    let mut out = String::from("collider_power_dbm,d_ge_m,core_area_m2\n");
    for &pc in &FIG5_COLLIDER_DBM {
        let scenario = CollisionScenario { collider_power_dbm: pc, ..CollisionScenario::example() };
        for (d, area) in area_vs_distance(&scenario, &model, &grid, &distances)? {
            writeln!(out, "{pc},{d},{area}").expect("string write");
        }
    }
    Ok(out)
}

pub const FIG12_SNR_DB: [f64; 8] = [30.0, 20.0, 10.0, 0.0, -5.0, -10.0, -15.0, -20.0];

/// One noisy frame at a random lead-in; returns the AIC onset error in samples.
/// The first chirp starts at full amplitude so the true onset is a sample.
fn aic_trial(phy: &PhyParams, fs: f64, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<f64, ReproError> {
    let tx = TxParams {
        ramp_fraction: 0.0,
        ..TxParams::new(rng.random_range(-30e3..30e3), rng.random_range(0.0..TAU), 2.0)
    };
    let frame = gen_frame(phy, &tx, &RxParams::default(), &[0; 4], fs)?;
    let lead_in = rng.random_range(3000..5000usize);
    let trace = add_awgn(&frame.with_lead_in(lead_in), snr_db, rng.random())?;
    let onset = detect_aic(&trace)?;
    Ok(onset.onset_sample as f64 - lead_in as f64)
}

/// AIC consistency against SNR, both from known truth and from the
/// four-detection round-trip estimate.
pub fn fig12(cfg: &ReproConfig) -> Result<String, ReproError> {
    let phy = PhyParams::eu868_sf7();
    let fs = cfg.sample_rate;
    let mut out = String::from("snr_db,trials,rmsd_us,roundtrip_rmsd_us,bias_samples\n");
    for (k, &snr) in FIG12_SNR_DB.iter().enumerate() {
        let errors: Vec<[f64; 4]> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.seed, ((k as u64) << 32) | t as u64);
                let mut e = [0.0; 4];
                for slot in &mut e {
                    *slot = aic_trial(&phy, fs, snr, &mut rng)?;
                }
                Ok(e)
            })
            .collect::<Result<_, ReproError>>()?;
        let flat: Vec<f64> = errors.iter().flatten().copied().collect();
        let rmsd_us = (flat.iter().map(|e| e * e).sum::<f64>() / flat.len() as f64).sqrt() / fs * 1e6;
        let deltas: Vec<RoundTripSample> =
            errors.iter().map(|e| RoundTripSample { delta_s: (e[0] - e[1] + e[2] - e[3]) / fs }).collect();
        let rt_us = match rmsd_roundtrip(&deltas) {
            Ok(v) => format!("{:.4}", v * 1e6),
            Err(_) => String::from("nan"),
        };
        writeln!(out, "{snr},{},{rmsd_us:.4},{rt_us},{:.3}", flat.len(), mean(&flat)).expect("string write");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbMethod {
    Linreg,
    Lsq,
}

pub const FIG13_SNR_DB: [f64; 11] = [40.0, 30.0, 20.0, 10.0, 0.0, -3.0, -6.0, -9.0, -12.0, -15.0, -18.0];

/// Signed estimation error of one chirp with random bias and phase.
pub fn fb_trial(
    phy: &PhyParams,
    fs: f64,
    snr_db: f64,
    method: FbMethod,
    rng: &mut ChaCha8Rng,
) -> Result<f64, ReproError> {
    let truth = rng.random_range(-25e3..25e3);
    let tx = TxParams::new(truth, rng.random_range(0.0..TAU), 2.0);
    let chirp = add_awgn(&gen_up_chirp(phy, &tx, &RxParams::default(), fs)?, snr_db, rng.random())?;
    let est = match method {
        FbMethod::Linreg => match estimate_fb_linreg(&chirp, phy) {
            Ok(fit) => fit.estimate.delta_hz,
            Err(FbError::OutOfBand(raw)) => raw,
            Err(e) => return Err(e.into()),
        },
        FbMethod::Lsq => {
            let cfg = LsqConfig { seed: rng.random(), ..LsqConfig::default() };
            estimate_fb_lsq(&chirp, phy, &cfg)?.delta_hz
        }
    };
    Ok(est - truth)
}

/// Error percentiles against SNR for one estimator.
pub fn fig13(cfg: &ReproConfig, method: FbMethod) -> Result<String, ReproError> {
    let phy = PhyParams::eu868_sf7();
    let fs = cfg.sample_rate;
    let mut out = String::from("snr_db,trials,p20_hz,p50_hz,p80_hz,max_abs_hz\n");
    for (k, &snr) in FIG13_SNR_DB.iter().enumerate() {
        let errors: Vec<f64> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| fb_trial(&phy, fs, snr, method, &mut stream_rng(cfg.seed, ((k as u64) << 32) | t as u64)))
            .collect::<Result<_, _>>()?;
        let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        writeln!(
            out,
            "{snr},{},{:.3},{:.3},{:.3},{max_abs:.3}",
            errors.len(),
            percentile(&errors, 20.0),
            percentile(&errors, 50.0),
            percentile(&errors, 80.0)
        )
        .expect("string write");
    }
    Ok(out)
}

/// Frame spacings of the variation CDFs, minutes.
pub const FIG17_INTERVALS_MIN: [usize; 3] = [10, 20, 30];

/// CDFs of bias variation between frames 10, 20 and 30 minutes apart,
/// from 100 simulated days sampled every minute.
pub fn fig17(cfg: &ReproConfig) -> String {
    let series = FbJitterModel::default().series(100 * 1440, 60.0, cfg.seed);
    let mut out = String::from("variation_hz,cdf_10min,cdf_20min,cdf_30min\n");
    for step in 0..=40 {
        let v = step as f64 * 25.0;
        let cdf: Vec<String> = FIG17_INTERVALS_MIN
            .iter()
            .map(|&lag| format!("{:.5}", 1.0 - consecutive_variation_rate(&series, lag, v)))
            .collect();
        writeln!(out, "{v},{}", cdf.join(",")).expect("string write");
    }
    out
}
