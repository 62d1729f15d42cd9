use std::f64::consts::TAU;

use lorats::fb::{
    estimate_fb_fft, estimate_fb_linreg, estimate_fb_lsq, lsq_objective, second_chirp, Estimator, FbError, FbWarning,
    LsqConfig, LsqProblem,
};
use lorats::signal::{add_awgn, gen_frame, gen_up_chirp, Bandwidth, IqTrace, PhyParams, RxParams, TxParams};
use lorats::stats::percentile;
use num_complex::Complex64;

const FS: f64 = 2.4e6;

fn chirp(phy: &PhyParams, fb: f64, theta: f64) -> IqTrace {
    gen_up_chirp(phy, &TxParams::new(fb, theta, 2.0), &RxParams::default(), FS).unwrap()
}

/// Independent bin oracle: dechirp and evaluate each grid tone with freshly computed exponentials.
fn naive_fft_bin(x: &IqTrace, phy: &PhyParams) -> f64 {
    let w = phy.bandwidth_hz();
    let rate = w * w / phy.chips() as f64;
    let step = w / phy.chips() as f64;
    let half = phy.chips() as i64 / 2;
    let mut best = (0i64, -1.0);
    for m in -half..half {
        let f = m as f64 * step;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, s) in x.samples.iter().enumerate() {
            let t = j as f64 / x.sample_rate;
            let sweep = std::f64::consts::PI * rate * t * t - std::f64::consts::PI * w * t;
            acc += s * Complex64::from_polar(1.0, -sweep - TAU * f * t);
        }
        if acc.norm_sqr() > best.1 {
            best = (m, acc.norm_sqr());
        }
    }
    best.0 as f64 * step
}

#[test]
fn fft_resolution_sf7_125k() {
    let phy = PhyParams::eu868_sf7();
    assert!((phy.bin_width_hz() - 976.5625).abs() < 1e-12);
    assert_eq!(format!("{:.2}", phy.bin_width_hz()), "976.56");
}

#[test]
fn fft_zero_bias_is_bin_zero() {
    let phy = PhyParams::eu868_sf7();
    let e = estimate_fb_fft(&chirp(&phy, 0.0, 0.0), &phy).unwrap();
    assert_eq!(e.delta_hz, 0.0);
    assert_eq!(e.estimator, Estimator::DechirpFft);
    assert_eq!(e.warning, None);
}

#[test]
fn fft_2000_hz_lands_on_1953_12() {
    let phy = PhyParams::eu868_sf7();
    let x = chirp(&phy, 2000.0, 1.0);
    let e = estimate_fb_fft(&x, &phy).unwrap();
    assert_eq!(e.delta_hz, 2.0 * 976.5625);
    assert_eq!(format!("{:.2}", e.delta_hz), "1953.12");
    assert_eq!(e.delta_hz, naive_fft_bin(&x, &phy));
}

#[test]
fn fft_matches_naive_oracle_and_is_quantized() {
    let phy = PhyParams::eu868_sf7();
    for (i, fb) in [-29_000.0, -12_345.6, -400.0, 488.0, 7_777.7, 24_000.0].into_iter().enumerate() {
        let x = chirp(&phy, fb, i as f64 * 0.7);
        let e = estimate_fb_fft(&x, &phy).unwrap();
        let k = e.delta_hz / phy.bin_width_hz();
        assert_eq!(k, k.round(), "not on grid");
        assert_eq!(e.delta_hz, naive_fft_bin(&x, &phy));
        assert!((e.delta_hz - fb).abs() <= phy.bin_width_hz() / 2.0 + 1e-9);
    }
}

#[test]
fn fft_half_bin_flags_ambiguity() {
    let phy = PhyParams::eu868_sf7();
    let e = estimate_fb_fft(&chirp(&phy, 976.5625 * 3.5, 0.0), &phy).unwrap();
    assert_eq!(e.warning, Some(FbWarning::AmbiguousPeak));
}

#[test]
fn wrong_length_rejected() {
    let phy = PhyParams::eu868_sf7();
    let x = chirp(&phy, 0.0, 0.0).slice(0..2000);
    assert!(matches!(estimate_fb_fft(&x, &phy), Err(FbError::Length { .. })));
    assert!(matches!(estimate_fb_linreg(&x, &phy), Err(FbError::Length { .. })));
}

#[test]
fn linreg_noiseless_minus_20k() {
    let phy = PhyParams::eu868_sf7();
    let fit = estimate_fb_linreg(&chirp(&phy, -20_000.0, 2.5), &phy).unwrap();
    assert!((fit.estimate.delta_hz + 20_000.0).abs() <= 1.0);
    assert!((fit.estimate.theta_rad.unwrap() - 2.5).abs() < 1e-6);
    assert_eq!(fit.estimate.warning, None);
}

#[test]
fn linreg_zero_bias_zero_phase() {
    let phy = PhyParams::eu868_sf7();
    let fit = estimate_fb_linreg(&chirp(&phy, 0.0, 0.0), &phy).unwrap();
    assert!(fit.estimate.delta_hz.abs() < 1e-6);
    let theta = fit.estimate.theta_rad.unwrap();
    assert!(theta.min(TAU - theta) < 1e-9);
}

#[test]
fn linreg_flags_wrap_storm() {
    let phy = PhyParams::eu868_sf7();
    // Raw phase alternates between +0.9pi and -0.9pi: every step is rectified.
    let x = IqTrace::new(
        (0..2458)
            .map(|n| Complex64::from_polar(1.0, if n % 2 == 0 { 0.9 } else { -0.9 } * std::f64::consts::PI))
            .collect(),
        FS,
    );
    let fit = estimate_fb_linreg(&x, &phy).unwrap();
    assert_eq!(fit.rectifications, 2457);
    assert_eq!(fit.estimate.warning, Some(FbWarning::UnwrapUnreliable));
}

#[test]
fn lsq_fast_objective_equals_direct_sum() {
    let phy = PhyParams::eu868_sf7();
    let x = add_awgn(&chirp(&phy, -18_500.0, 4.0), 3.0, 8).unwrap();
    let p = LsqProblem::new(&x, &phy, 0.9);
    for (d, t) in [(-18_500.0, 4.0), (0.0, 0.0), (1234.0, 6.0), (-29_999.0, 0.1)] {
        let direct = lsq_objective(&x, &phy, 0.9, d, t);
        assert!((p.objective(d, t) - direct).abs() < 1e-8 * direct, "{d} {t}");
    }
}

#[test]
fn lsq_objective_minimum_at_truth() {
    let phy = PhyParams::eu868_sf7();
    let x = chirp(&phy, 5_000.0, 1.0);
    let at_truth = lsq_objective(&x, &phy, 1.0, 5_000.0, 1.0);
    assert!(at_truth < 1e-12);
    assert!(at_truth <= lsq_objective(&x, &phy, 1.0, 5_500.0, 1.0));
}

#[test]
fn lsq_noiseless_within_one_hz() {
    let phy = PhyParams::eu868_sf7();
    for (i, fb) in [-29_000.0, -20_000.0, -733.3, 0.0, 15_000.5].into_iter().enumerate() {
        let cfg = LsqConfig { seed: i as u64, ..LsqConfig::default() };
        let e = estimate_fb_lsq(&chirp(&phy, fb, 0.3 + i as f64), &phy, &cfg).unwrap();
        assert!((e.delta_hz - fb).abs() <= 1.0, "{fb}: {}", e.delta_hz);
        assert_eq!(e.warning, None);
    }
}

#[test]
fn lsq_is_deterministic_per_seed_and_thread_count() {
    let phy = PhyParams::eu868_sf7();
    let x = add_awgn(&chirp(&phy, -21_000.0, 2.0), -12.0, 77).unwrap();
    let cfg = LsqConfig { seed: 3, ..LsqConfig::default() };
    let a = estimate_fb_lsq(&x, &phy, &cfg).unwrap();
    let b = estimate_fb_lsq(&x, &phy, &LsqConfig { parallel: false, ..cfg }).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| estimate_fb_lsq(&x, &phy, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn lsq_boundary_warning() {
    let phy = PhyParams::eu868_sf7();
    let cfg = LsqConfig { delta_bounds: (-10_000.0, 10_000.0), ..LsqConfig::default() };
    let e = estimate_fb_lsq(&chirp(&phy, 10_400.0, 0.0), &phy, &cfg).unwrap();
    assert_eq!(e.warning, Some(FbWarning::BoundarySolution));
    assert!((e.delta_hz - 10_000.0).abs() < 0.1);
}

#[test]
fn lsq_config_validation() {
    let phy = PhyParams::eu868_sf7();
    let x = chirp(&phy, 0.0, 0.0);
    let bad = LsqConfig { population: 10, ..LsqConfig::default() };
    assert!(matches!(estimate_fb_lsq(&x, &phy, &bad), Err(FbError::Config(_))));
    let bad = LsqConfig { delta_bounds: (f64::NEG_INFINITY, 0.0), ..LsqConfig::default() };
    assert!(matches!(estimate_fb_lsq(&x, &phy, &bad), Err(FbError::Config(_))));
}

#[test]
fn noiseless_consistency_grid_10_by_8() {
    let phy = PhyParams::eu868_sf7();
    for i in 0..10 {
        let fb = -28_000.0 + i as f64 * 6_123.4;
        for k in 0..8 {
            let theta = k as f64 * TAU / 8.0;
            let x = chirp(&phy, fb, theta);
            let lsq =
                estimate_fb_lsq(&x, &phy, &LsqConfig { seed: (i * 8 + k) as u64, ..LsqConfig::default() }).unwrap();
            let lin = estimate_fb_linreg(&x, &phy).unwrap().estimate;
            let fft = estimate_fb_fft(&x, &phy).unwrap();
            assert!((lsq.delta_hz - fb).abs() <= 1.0, "lsq {fb} {theta}");
            assert!((lin.delta_hz - fb).abs() <= 1.0, "linreg {fb} {theta}");
            assert!((fft.delta_hz - fb).abs() <= phy.bin_width_hz() / 2.0 + 1e-9, "fft {fb} {theta}");
        }
    }
}

#[test]
fn bandwidth_variants_noiseless() {
    for bw in [Bandwidth::Khz125, Bandwidth::Khz250, Bandwidth::Khz500] {
        let phy = PhyParams::new(7, bw, 869.75e6).unwrap();
        let fs = 2.0 * bw.hz() + 4.0 * 60e3;
        let fb = -17_250.0;
        let x = gen_up_chirp(&phy, &TxParams::new(fb, 1.0, 2.0), &RxParams::default(), fs).unwrap();
        let lsq = estimate_fb_lsq(&x, &phy, &LsqConfig::default()).unwrap();
        let lin = estimate_fb_linreg(&x, &phy).unwrap().estimate;
        let fft = estimate_fb_fft(&x, &phy).unwrap();
        assert!((lsq.delta_hz - fb).abs() <= 1.0, "{bw:?} lsq {}", lsq.delta_hz);
        assert!((lin.delta_hz - fb).abs() <= 1.0, "{bw:?} linreg {}", lin.delta_hz);
        assert!((fft.delta_hz - fb).abs() <= phy.bin_width_hz() / 2.0, "{bw:?} fft");
    }
}

#[test]
fn lsq_phase_invariance_at_fixed_noise() {
    // Noise enters before down-conversion, so a receiver phase rotates signal and noise together.
    let phy = PhyParams::eu868_sf7();
    let noisy = add_awgn(&chirp(&phy, -19_000.0, 0.0), -10.0, 1234).unwrap();
    let estimates: Vec<f64> = (0..8)
        .map(|k| {
            let rot = Complex64::from_polar(1.0, -(k as f64) * TAU / 8.0);
            let x = IqTrace { samples: noisy.samples.iter().map(|z| z * rot).collect(), ..noisy.clone() };
            estimate_fb_lsq(&x, &phy, &LsqConfig::default()).unwrap().delta_hz
        })
        .collect();
    let (lo, hi) = estimates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi - lo <= 5.0, "{estimates:?}");
}

#[test]
fn lsq_error_percentiles_degrade_monotonically() {
    let phy = PhyParams::eu868_sf7();
    let mut previous = (0.0, 0.0);
    for (level, snr) in [0.0, -6.0, -12.0, -18.0, -24.0].into_iter().enumerate() {
        let errors: Vec<f64> = (0..50u64)
            .map(|s| {
                let fb = -25_000.0 + (s as f64 * 997.0) % 50_000.0;
                let x = add_awgn(&chirp(&phy, fb, (s as f64 * 0.37) % TAU), snr, 10_000 + s).unwrap();
                let cfg = LsqConfig { seed: s, ..LsqConfig::default() };
                (estimate_fb_lsq(&x, &phy, &cfg).unwrap().delta_hz - fb).abs()
            })
            .collect();
        let band = (percentile(&errors, 20.0), percentile(&errors, 80.0));
        assert!(band.0 >= previous.0 && band.1 >= previous.1, "level {level}: {band:?} after {previous:?}");
        previous = band;
    }
}

#[test]
fn second_chirp_slice() {
    let phy = PhyParams::eu868_sf7();
    let f = gen_frame(&phy, &TxParams::new(-20_000.0, 1.0, 2.0), &RxParams::default(), &[], FS).unwrap();
    let c2 = second_chirp(&f.with_lead_in(100), 100, &phy).unwrap();
    assert_eq!(c2.len(), 2458);
    let e = estimate_fb_lsq(&c2, &phy, &LsqConfig::default()).unwrap();
    assert!((e.delta_hz + 20_000.0).abs() <= 1.0);
    assert!(second_chirp(&f, f.len() - 3000, &phy).is_err());
}
