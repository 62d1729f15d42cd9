use std::f64::consts::{PI, TAU};

use super::{check_band, check_chirp, Estimator, FbError, FbEstimate, FbWarning};
use crate::signal::{up_sweep_phase, IqTrace, PhyParams};
use crate::stats::fit_line;

#[derive(Debug, Clone, PartialEq)]
pub struct LinregFit {
    pub estimate: FbEstimate,
    /// Number of `2*pi` rectifications applied while unwrapping.
    pub rectifications: usize,
}

/// `atan2` phase with `2*pi*k` added; `k` steps whenever consecutive samples
/// jump by more than `pi`. Returns the phase and the number of steps.
pub fn unwrap_phase(samples: &[num_complex::Complex64]) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(samples.len());
    let mut k = 0.0;
    let mut steps = 0;
    let mut prev = None;
    for z in samples {
        let raw = z.im.atan2(z.re);
        if let Some(p) = prev {
            let d = raw - p;
            if d > PI {
                k -= 1.0;
                steps += 1;
            } else if d < -PI {
                k += 1.0;
                steps += 1;
            }
        }
        prev = Some(raw);
        out.push(raw + TAU * k);
    }
    (out, steps)
}

/// Fit `2*pi*fb*t + theta` to the unwrapped phase minus the known sweep.
pub fn estimate_fb_linreg(chirp: &IqTrace, phy: &PhyParams) -> Result<LinregFit, FbError> {
    check_chirp(chirp, phy)?;
    let (phase, rectifications) = unwrap_phase(&chirp.samples);
    let t: Vec<f64> = (0..chirp.len()).map(|j| j as f64 / chirp.sample_rate).collect();
    let residual: Vec<f64> = phase.iter().zip(&t).map(|(p, &tau)| p - up_sweep_phase(phy, tau)).collect();
    let line = fit_line(&t, &residual).ok_or(FbError::Config("chirp too short"))?;
    let delta_hz = check_band(line.slope / TAU, phy)?;
    let unreliable = 4 * rectifications >= chirp.len();
    Ok(LinregFit {
        estimate: FbEstimate {
            delta_hz,
            estimator: Estimator::Linreg,
            residual: line.rss,
            theta_rad: Some(line.intercept.rem_euclid(TAU)),
            snr_db: None,
            warning: unreliable.then_some(FbWarning::UnwrapUnreliable),
        },
        rectifications,
    })
}
