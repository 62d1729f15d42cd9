use super::{check_band, check_chirp, Estimator, FbError, FbEstimate, FbWarning};
use crate::dsp::dft_at;
use crate::signal::{demod::dechirp, IqTrace, PhyParams};

/// Runner-up bins closer than this to the peak flag the estimate.
const AMBIGUITY_DB: f64 = 1.0;

/// Dechirp, then pick the strongest tone on the grid `m * W / 2^S`,
/// `m` in `[-2^(S-1), 2^(S-1))`. The result is always a grid point.
pub fn estimate_fb_fft(chirp: &IqTrace, phy: &PhyParams) -> Result<FbEstimate, FbError> {
    check_chirp(chirp, phy)?;
    let y = dechirp(&chirp.samples, phy, chirp.sample_rate, 0.0);
    let half = phy.chips() as i64 / 2;
    let step = phy.bin_width_hz();
    let powers: Vec<(i64, f64)> =
        (-half..half).map(|m| (m, dft_at(&y, m as f64 * step, chirp.sample_rate).norm_sqr())).collect();
    let (mut best, mut second) = ((0i64, f64::NEG_INFINITY), f64::NEG_INFINITY);
    for &(m, p) in &powers {
        if p > best.1 {
            second = best.1;
            best = (m, p);
        } else if p > second {
            second = p;
        }
    }
    let margin_db = 10.0 * (best.1 / second.max(f64::MIN_POSITIVE)).log10();
    let delta_hz = check_band(best.0 as f64 * step, phy)?;
    Ok(FbEstimate {
        delta_hz,
        estimator: Estimator::DechirpFft,
        residual: margin_db,
        theta_rad: None,
        snr_db: None,
        warning: (margin_db < AMBIGUITY_DB).then_some(FbWarning::AmbiguousPeak),
    })
}
