use std::f64::consts::TAU;

use lorats::attack::replay;
use lorats::detect::{
    check_fb, check_temp_consistency, consecutive_variation_rate, fit_temp_model, pih_max_interval, pih_next_interval,
    pih_verify, roc_curve, temperature_score, write_verdict_event, DetectError, DeviceProfile, FbJitterModel,
    FrameObservation, PihConfig, PihState, ProfileStore, TempModel, TempSynth, Verdict, VerdictEvent,
    DEFAULT_FB_THRESHOLD_HZ,
};
use lorats::fb::{estimate_fb_lsq, Estimator, FbEstimate, LsqConfig};
use lorats::signal::{add_awgn, gen_up_chirp};
use lorats::{Bandwidth, PhyParams, RxParams, TxParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const FS: f64 = 2.4e6;
const MINUTE_NS: i64 = 60_000_000_000;

fn obs(device: &str, delta_hz: f64, rx_time_ns: i64, counter: u64) -> FrameObservation {
    FrameObservation {
        device_id: device.into(),
        rx_time_ns,
        fb: FbEstimate {
            delta_hz,
            estimator: Estimator::Lsq,
            residual: 0.0,
            theta_rad: None,
            snr_db: None,
            warning: None,
        },
        spreading_factor: 7,
        bandwidth: Bandwidth::Khz125,
        temp_reading: None,
        frame_counter: counter,
    }
}

fn profiled(center_hz: f64) -> DeviceProfile {
    let mut p = DeviceProfile::new("dev");
    for i in 0..20 {
        p.enroll(7, Bandwidth::Khz125, i * MINUTE_NS, center_hz + if i % 2 == 0 { 15.0 } else { -15.0 });
    }
    p
}

#[test]
fn fb_check_examples() {
    let mut p = profiled(-20_000.0);
    assert_eq!(check_fb(&mut p, &obs("dev", -20_100.0, 30 * MINUTE_NS, 0)).unwrap(), Verdict::Accept);
    assert_eq!(check_fb(&mut p, &obs("dev", -20_600.0, 31 * MINUTE_NS, 1)).unwrap(), Verdict::ReplaySuspected);
    assert_eq!(check_fb(&mut p, &obs("dev", -19_970.0, 32 * MINUTE_NS, 2)).unwrap(), Verdict::Accept);
    assert_eq!(DEFAULT_FB_THRESHOLD_HZ, 500.0);
}

#[test]
fn alarms_never_enter_the_history() {
    let mut p = profiled(-20_000.0);
    let before = p.clone();
    for k in 0..50 {
        let v = check_fb(&mut p, &obs("dev", -20_700.0, (40 + k) * MINUTE_NS, k as u64)).unwrap();
        assert_eq!(v, Verdict::ReplaySuspected);
    }
    assert_eq!(p, before);
}

#[test]
fn threshold_edge_is_accepted() {
    let mut p = DeviceProfile::new("dev").with_threshold(250.0).unwrap();
    p.enroll(7, Bandwidth::Khz125, 0, 1000.0);
    assert_eq!(check_fb(&mut p, &obs("dev", 1250.0, 1, 0)).unwrap(), Verdict::Accept);
    assert_eq!(check_fb(&mut p, &obs("dev", 1500.5, 2, 1)).unwrap(), Verdict::ReplaySuspected);
    assert!(DeviceProfile::new("x").with_threshold(0.0).is_err());
    assert!(DeviceProfile::new("x").with_history_window(0).is_err());
}

#[test]
fn unprofiled_settings_are_not_enrolled() {
    let mut p = DeviceProfile::new("dev");
    assert_eq!(check_fb(&mut p, &obs("dev", -20_000.0, 0, 0)).unwrap(), Verdict::Unprofiled);
    assert!(p.history(7, Bandwidth::Khz125).is_none_or(|h| h.records.is_empty()));
    let mut other = obs("dev", -20_000.0, 0, 0);
    other.spreading_factor = 9;
    let mut q = profiled(-20_000.0);
    assert_eq!(check_fb(&mut q, &other).unwrap(), Verdict::Unprofiled);
    assert!(matches!(check_fb(&mut q, &obs("intruder", 0.0, 0, 0)), Err(DetectError::DeviceMismatch { .. })));
}

#[test]
fn median_center_ignores_a_few_transients() {
    let mut p = DeviceProfile::new("dev");
    for i in 0..20 {
        let spike = if i % 7 == 0 { 2000.0 } else { 0.0 };
        p.enroll(7, Bandwidth::Khz125, i, -20_000.0 + spike);
    }
    assert_eq!(check_fb(&mut p, &obs("dev", -20_050.0, 100, 0)).unwrap(), Verdict::Accept);
}

#[test]
fn jitter_model_variation_shares_match_the_reference_cdf() {
    let series = FbJitterModel::default().series(144_000, 60.0, 17);
    for (lag, want) in [(10, 0.004), (20, 0.013), (30, 0.017)] {
        let rate = consecutive_variation_rate(&series, lag, 500.0);
        assert!((rate - want).abs() < 0.005, "{lag} min: {rate}");
    }
}

#[test]
fn false_alarm_rate_at_30_minute_spacing_is_below_two_percent() {
    let model = FbJitterModel::default();
    let (mut alarms, mut checked) = (0usize, 0usize);
    for seed in 0..10 {
        let series = model.series(4800, 1800.0, seed);
        let mut p = DeviceProfile::new("dev");
        for (i, &d) in series[..20].iter().enumerate() {
            p.enroll(7, Bandwidth::Khz125, i as i64 * 30 * MINUTE_NS, d);
        }
        for (i, &d) in series.iter().enumerate().skip(20) {
            let v = check_fb(&mut p, &obs("dev", d, i as i64 * 30 * MINUTE_NS, i as u64)).unwrap();
            alarms += v.is_alarm() as usize;
            checked += 1;
        }
    }
    let rate = alarms as f64 / checked as f64;
    assert!(rate <= 0.02, "{rate}");
}

fn lsq_at(chirp: &lorats::IqTrace, seed: u64) -> f64 {
    let cfg = LsqConfig { seed, ..LsqConfig::default() };
    estimate_fb_lsq(chirp, &PhyParams::eu868_sf7(), &cfg).unwrap().delta_hz
}

/// Profiles a device from 20 honest chirps, then checks one replay.
fn replay_verdict(seed: u64, snr_db: f64, replay_fb_hz: f64) -> Verdict {
    let phy = PhyParams::eu868_sf7();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx = TxParams::new(rng.random_range(-25e3..25e3), rng.random_range(0.0..TAU), 2.0);
    let clean = gen_up_chirp(&phy, &tx, &RxParams::default(), FS).unwrap();
    let mut p = DeviceProfile::new("dev");
    for k in 0..20 {
        let honest = add_awgn(&clean, snr_db, rng.random()).unwrap();
        p.enroll(7, Bandwidth::Khz125, k, lsq_at(&honest, k as u64));
    }
    let replayed = replay(&clean, 0.15, replay_fb_hz, rng.random_range(0.0..TAU)).unwrap();
    let received = add_awgn(&replayed, snr_db, rng.random()).unwrap();
    check_fb(&mut p, &obs("dev", lsq_at(&received, seed), 100, 0)).unwrap()
}

#[test]
fn replays_beyond_threshold_plus_four_sigma_are_flagged() {
    // LSQ sigma is ~61 Hz at -18 dB and ~31 Hz at -12 dB for this chirp.
    for seed in 0..20 {
        assert_eq!(replay_verdict(seed, -18.0, -750.0), Verdict::ReplaySuspected, "seed {seed}");
        assert_eq!(replay_verdict(100 + seed, -12.0, -600.0), Verdict::ReplaySuspected, "seed {seed}");
    }
}

#[test]
fn zero_fb_replays_pass_the_fb_check() {
    for seed in 0..10 {
        assert_eq!(replay_verdict(200 + seed, -18.0, 30.0), Verdict::Accept, "seed {seed}");
    }
}

#[test]
fn exact_temperature_line_has_zero_rmse() {
    let pairs: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let t = 25.0 + i as f64 * 0.1;
            (t, 800.0 * t - 40_000.0)
        })
        .collect();
    let m = fit_temp_model(&pairs).unwrap();
    assert!(m.rmse_c < 1e-9);
    assert!((m.slope_hz_per_c - 800.0).abs() < 1e-6);
}

#[test]
fn synthetic_crystal_fits_below_half_a_degree() {
    let pairs = TempSynth::default().pairs(2000, 11);
    let m = fit_temp_model(&pairs).unwrap();
    assert!(m.rmse_c < 0.5, "{}", m.rmse_c);
    assert!(m.slope_hz_per_c > 0.0);
}

#[test]
fn synthetic_noise_has_a_100_hz_interquartile_spread() {
    let s = TempSynth::default();
    let pairs = TempSynth { resolution_c: 1e-9, ..s }.pairs(20_000, 3);
    let mut residuals: Vec<f64> = pairs.iter().map(|&(t, f)| f - s.slope_hz_per_c * t - s.intercept_hz).collect();
    residuals.sort_by(f64::total_cmp);
    let iqr = residuals[15_000] - residuals[5_000];
    assert!((iqr - 100.0).abs() < 5.0, "{iqr}");
}

#[test]
fn temperature_model_input_errors() {
    let line = |n: usize, span: f64| -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = 25.0 + span * i as f64 / n as f64;
                (t, 800.0 * t)
            })
            .collect()
    };
    assert_eq!(fit_temp_model(&line(29, 5.0)), Err(DetectError::TooFewPairs { need: 30, got: 29 }));
    assert!(matches!(fit_temp_model(&line(100, 1.0)), Err(DetectError::TemperatureSpread(_))));
    let flat: Vec<(f64, f64)> = line(100, 5.0).into_iter().map(|(t, _)| (t, -20_000.0)).collect();
    assert!(matches!(fit_temp_model(&flat), Err(DetectError::DegenerateModel(_))));
    assert!(fit_temp_model(&[(f64::NAN, 0.0); 40]).is_err());
}

#[test]
fn temperature_consistency_examples() {
    let model = TempModel { slope_hz_per_c: 800.0, intercept_hz: -40_000.0, rmse_c: 0.1 };
    let mut p = DeviceProfile::new("dev");
    let mut o = obs("dev", model.fb_at(27.3), 0, 0);
    o.temp_reading = Some(27.3);
    assert_eq!(check_temp_consistency(&p, &o, 0.5), Err(DetectError::NoTemperatureModel));
    p.temp_model = Some(model);
    for th in [1e-6, 0.5, 3.0] {
        assert_eq!(check_temp_consistency(&p, &o, th).unwrap(), Verdict::Accept);
    }
    o.fb.delta_hz += 600.0;
    assert!((temperature_score(&model, o.fb.delta_hz, 27.3).unwrap() - 0.75).abs() < 1e-9);
    assert_eq!(check_temp_consistency(&p, &o, 0.5).unwrap(), Verdict::TemperatureMismatch);
    o.temp_reading = None;
    assert_eq!(check_temp_consistency(&p, &o, 0.5), Err(DetectError::NoTemperatureReading));
}

#[test]
fn roc_reaches_full_detection_at_one_percent_false_alarms() {
    let synth = TempSynth::default();
    let model = fit_temp_model(&synth.pairs(2000, 1)).unwrap();
    let test = synth.pairs(2000, 2);
    let honest: Vec<f64> = test.iter().map(|&(t, f)| temperature_score(&model, f, t).unwrap()).collect();
    let attack: Vec<f64> = test.iter().map(|&(t, f)| temperature_score(&model, f + 600.0, t).unwrap()).collect();
    let thresholds: Vec<f64> = (1..=150).map(|k| k as f64 * 0.01).collect();
    let roc = roc_curve(&honest, &attack, &thresholds);
    assert!(roc.iter().any(|p| p.tpr == 1.0 && p.fpr <= 0.01), "{roc:?}");
    assert!(roc.windows(2).all(|w| w[1].tpr <= w[0].tpr && w[1].fpr <= w[0].fpr));
}

fn pih_config() -> PihConfig {
    PihConfig::new([7u8; 32], 60_000_000_000, 250_000_000_000, 10_000_000).unwrap()
}

#[test]
fn pih_stream_is_deterministic_and_in_range() {
    let cfg = pih_config();
    for i in 0..10_000 {
        let a = cfg.interval_ns(i);
        assert_eq!(a, cfg.interval_ns(i));
        assert!(a > cfg.min_interval_ns && a <= cfg.max_interval_ns, "{i}: {a}");
    }
    assert!((pih_next_interval(&cfg, 3) - cfg.interval_ns(3) as f64 * 1e-9).abs() < 1e-12);
    let other = PihConfig::new([8u8; 32], 60_000_000_000, 250_000_000_000, 10_000_000).unwrap();
    assert_ne!(cfg.interval_ns(0), other.interval_ns(0));
}

#[test]
fn pih_stream_matches_the_documented_vectors() {
    let seed: [u8; 32] = std::array::from_fn(|i| i as u8);
    let cfg = PihConfig::new(seed, 60_000_000_000, 250_000_000_000, 10_000_000).unwrap();
    for (i, want) in [(0, 200_668_383_267), (1, 106_930_945_543), (2, 119_966_415_696), (1000, 211_599_680_133)] {
        assert_eq!(cfg.interval_ns(i), want, "index {i}");
    }
}

#[test]
fn pih_stream_is_uniform_by_chi_square() {
    let cfg = pih_config();
    let bins = 100usize;
    let n = 100_000u64;
    let span = (cfg.max_interval_ns - cfg.min_interval_ns) as f64;
    let mut counts = vec![0f64; bins];
    for i in 0..n {
        let u = (cfg.interval_ns(i) - cfg.min_interval_ns) as f64 / span;
        counts[((u * bins as f64).ceil() as usize).clamp(1, bins) - 1] += 1.0;
    }
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p > 0.01, "chi2 {stat}, p {p}");
}

#[test]
fn pih_max_interval_examples() {
    assert_eq!(pih_max_interval(0.010, 40.0).unwrap(), 250);
    assert_eq!(pih_max_interval(0.072, 40.0).unwrap(), 1800);
    assert_eq!(pih_max_interval(0.010, 0.001).unwrap(), 10_000_000);
    assert!(pih_max_interval(0.0, 40.0).is_err());
    assert!(pih_max_interval(0.01, 0.0).is_err());
}

fn pih_profile(cfg: PihConfig) -> DeviceProfile {
    let mut p = DeviceProfile::new("dev");
    p.pih = Some(PihState::new(cfg));
    p
}

/// Gateway arrival times of frames `0..count` for a device whose clock runs
/// fast by `drift_ppm`, starting at `offset_ns` on the gateway clock.
fn arrivals(cfg: &PihConfig, count: u64, drift_ppm: f64, offset_ns: i64) -> Vec<i64> {
    let mut t = offset_ns as i128;
    let mut out = vec![offset_ns];
    for i in 0..count - 1 {
        t += (cfg.interval_ns(i) as f64 * (1.0 + drift_ppm * 1e-6)).round() as i128;
        out.push(t as i64);
    }
    out
}

#[test]
fn pih_on_schedule_frames_are_accepted() {
    let cfg = pih_config();
    let mut p = pih_profile(cfg.clone());
    let times = arrivals(&cfg, 50, 0.0, 5_000_000_000);
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, times[0], 0)).unwrap(), Verdict::Unprofiled);
    for (i, &t) in times.iter().enumerate().skip(1) {
        assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, t, i as u64)).unwrap(), Verdict::Accept);
    }
}

#[test]
fn pih_flags_delay_on_the_first_delayed_frame() {
    let cfg = pih_config();
    let mut p = pih_profile(cfg.clone());
    let times = arrivals(&cfg, 20, 12.0, 0);
    for (i, &t) in times.iter().enumerate().take(10) {
        pih_verify(&mut p, &obs("dev", 0.0, t, i as u64)).unwrap();
    }
    let anchor = p.pih.clone();
    let delayed = times[10] + 150_000_000;
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, delayed, 10)).unwrap(), Verdict::DelaySuspected);
    assert_eq!(p.pih, anchor);
    // Delays within the tolerance, less the 3 ms drift error, pass unseen.
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, times[10] + 5_000_000, 10)).unwrap(), Verdict::Accept);
}

#[test]
fn pih_honest_drift_is_never_flagged() {
    let cfg = pih_config();
    for drift in [-40.0, -17.5, 0.0, 23.0, 40.0] {
        let mut p = pih_profile(cfg.clone());
        let times = arrivals(&cfg, 10_000, drift, -3_000_000_000);
        for (i, &t) in times.iter().enumerate() {
            let v = pih_verify(&mut p, &obs("dev", 0.0, t, i as u64)).unwrap();
            assert!(!v.is_alarm(), "drift {drift} ppm, frame {i}");
        }
    }
}

#[test]
fn pih_recovers_after_a_lost_frame() {
    let cfg = pih_config();
    let mut p = pih_profile(cfg.clone());
    let times = arrivals(&cfg, 6, 10.0, 0);
    for i in [0usize, 1, 2] {
        pih_verify(&mut p, &obs("dev", 0.0, times[i], i as u64)).unwrap();
    }
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, times[4], 4)).unwrap(), Verdict::GapRecovered);
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, times[5], 5)).unwrap(), Verdict::Accept);
}

#[test]
fn pih_rejects_replayed_counters_and_long_gaps() {
    let cfg = pih_config();
    let mut p = pih_profile(cfg.clone());
    let times = arrivals(&cfg, 100, 0.0, 0);
    pih_verify(&mut p, &obs("dev", 0.0, times[0], 0)).unwrap();
    pih_verify(&mut p, &obs("dev", 0.0, times[1], 1)).unwrap();
    assert_eq!(pih_verify(&mut p, &obs("dev", 0.0, times[1] + 1, 1)).unwrap(), Verdict::DelaySuspected);
    assert_eq!(
        pih_verify(&mut p, &obs("dev", 0.0, times[99], 99)),
        Err(DetectError::ResyncRequired { gap: 98, window: 64 })
    );
    assert_eq!(pih_verify(&mut DeviceProfile::new("dev"), &obs("dev", 0.0, 0, 0)), Err(DetectError::NoPih));
}

#[test]
fn pih_is_independent_of_clock_offset() {
    let cfg = pih_config();
    let verdicts = |offset: i64| -> Vec<Verdict> {
        let mut p = pih_profile(cfg.clone());
        let mut times = arrivals(&cfg, 30, 25.0, offset);
        times[17] += 150_000_000;
        times.iter().enumerate().map(|(i, &t)| pih_verify(&mut p, &obs("dev", 0.0, t, i as u64)).unwrap()).collect()
    };
    let base = verdicts(0);
    assert_eq!(base[17], Verdict::DelaySuspected);
    for offset in [-86_400_000_000_000, 1, 1_700_000_000_000_000_000] {
        assert_eq!(verdicts(offset), base, "offset {offset}");
    }
}

#[test]
fn pih_seed_round_trips_as_hex() {
    let cfg = pih_config();
    let json = serde_json::to_string(&cfg).unwrap();
    assert!(json.contains(&"07".repeat(32)));
    assert_eq!(serde_json::from_str::<PihConfig>(&json).unwrap(), cfg);
}

#[test]
fn store_replays_the_log_and_compacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profiles.jsonl");
    let mut store = ProfileStore::open(&path).unwrap();
    let mut p = profiled(-20_000.0);
    p.pih = Some(PihState::anchored(pih_config(), 3, 42));
    p.temp_model = Some(TempModel { slope_hz_per_c: 800.0, intercept_hz: -40_000.0, rmse_c: 0.1 });
    store.put(DeviceProfile::new("dev")).unwrap();
    store.put(p.clone()).unwrap();
    store.put(DeviceProfile::new("other")).unwrap();
    drop(store);

    let mut reopened = ProfileStore::open(&path).unwrap();
    assert_eq!(reopened.log_lines(), 3);
    assert_eq!(reopened.get("dev"), Some(&p));
    reopened.compact().unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    assert_eq!(ProfileStore::open(&path).unwrap().get("dev"), Some(&p));
    assert_eq!(reopened.devices().map(|d| d.device_id.as_str()).collect::<Vec<_>>(), ["dev", "other"]);
}

#[test]
fn corrupt_store_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profiles.jsonl");
    let good = serde_json::to_string(&DeviceProfile::new("a")).unwrap();
    std::fs::write(&path, format!("{good}\n{{not json\n")).unwrap();
    assert!(matches!(ProfileStore::open(&path), Err(DetectError::Corrupt { line: 2, .. })));
}

#[test]
fn verdict_events_are_json_lines() {
    let mut out = Vec::new();
    let e = VerdictEvent {
        device_id: "dev".into(),
        rx_time_ns: 12,
        verdict: Verdict::ReplaySuspected,
        detail: "fb -600 Hz from center".into(),
    };
    write_verdict_event(&mut out, &e).unwrap();
    write_verdict_event(&mut out, &VerdictEvent { verdict: Verdict::Accept, ..e.clone() }).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["verdict"], "REPLAY_SUSPECTED");
    assert_eq!(v["rx_time_ns"], 12);
    assert_eq!(serde_json::from_str::<VerdictEvent>(lines[0]).unwrap(), e);
}
