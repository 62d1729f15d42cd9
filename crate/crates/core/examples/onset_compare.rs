//! Matched-filter onset against AIC onset as the frequency bias varies.
//!
//! A chirp's correlation peak slides by `-fb / sweep_rate` in time, so a
//! matched filter confuses bias with delay; AIC keys on the power change and
//! does not.
//!
//! `cargo run --release -p lorats-core --example onset_compare`

use lorats::onset::detect_aic;
use lorats::signal::{add_awgn, gen_frame, gen_up_chirp};
use lorats::{PhyParams, RxParams, TxParams};
use num_complex::Complex64;

const FS: f64 = 2.4e6;
const LEAD_IN: usize = 4000;
const SNR_DB: f64 = 10.0;

/// Lag of the strongest correlation with `template` over the first chirp.
fn matched_filter_onset(samples: &[Complex64], template: &[Complex64], max_lag: usize) -> usize {
    (0..max_lag)
        .map(|lag| {
            let c: Complex64 = samples[lag..lag + template.len()].iter().zip(template).map(|(s, t)| s * t.conj()).sum();
            (lag, c.norm_sqr())
        })
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

fn main() {
    let phy = PhyParams::eu868_sf7();
    let template =
        gen_up_chirp(&phy, &TxParams::new(0.0, 0.0, 1.0), &RxParams::default(), FS).expect("template").samples;
    let max_lag = LEAD_IN + template.len() / 2;
    println!("fb_hz,matched_filter_error_us,aic_error_us,predicted_slide_us");
    for (k, fb) in [-25e3, -10e3, 0.0, 10e3, 25e3].into_iter().enumerate() {
        let tx = TxParams { ramp_fraction: 0.0, ..TxParams::new(fb, 0.7, 2.0) };
        let frame = gen_frame(&phy, &tx, &RxParams::default(), &[5, 9], FS).expect("frame");
        let trace = add_awgn(&frame.with_lead_in(LEAD_IN), SNR_DB, k as u64).expect("noise");
        let mf = matched_filter_onset(&trace.samples, &template, max_lag) as f64 - LEAD_IN as f64;
        let aic = detect_aic(&trace).expect("aic").onset_sample as f64 - LEAD_IN as f64;
        let slide = -fb / phy.sweep_rate();
        println!("{fb},{:.2},{:.2},{:.2}", mf / FS * 1e6, aic / FS * 1e6, slide * 1e6);
    }
}
