use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DetectError, DeviceProfile, FrameObservation, Verdict};
use crate::stats::fit_line;

pub const MIN_TEMP_PAIRS: usize = 30;
pub const MIN_TEMP_SPREAD_C: f64 = 2.0;
/// Slopes flatter than this make the inverse mapping meaningless.
pub const MIN_SLOPE_HZ_PER_C: f64 = 1.0;

/// `fb = slope * T + intercept`, with the fit error expressed in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempModel {
    pub slope_hz_per_c: f64,
    pub intercept_hz: f64,
    pub rmse_c: f64,
}

impl TempModel {
    pub fn estimate_temperature(&self, fb_hz: f64) -> f64 {
        (fb_hz - self.intercept_hz) / self.slope_hz_per_c
    }

    pub fn fb_at(&self, temp_c: f64) -> f64 {
        self.slope_hz_per_c * temp_c + self.intercept_hz
    }
}

/// Fits the bias-temperature line; RMSE is taken over the inverse mapping.
pub fn fit_temp_model(pairs: &[(f64, f64)]) -> Result<TempModel, DetectError> {
    if pairs.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
        return Err(DetectError::Parameter("non-finite temperature pair"));
    }
    if pairs.len() < MIN_TEMP_PAIRS {
        return Err(DetectError::TooFewPairs { need: MIN_TEMP_PAIRS, got: pairs.len() });
    }
    let (lo, hi) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    if hi - lo < MIN_TEMP_SPREAD_C {
        return Err(DetectError::TemperatureSpread(hi - lo));
    }
    let temps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fbs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let line = fit_line(&temps, &fbs).ok_or(DetectError::TemperatureSpread(0.0))?;
    if line.slope.abs() < MIN_SLOPE_HZ_PER_C {
        return Err(DetectError::DegenerateModel(line.slope));
    }
    let mut model = TempModel { slope_hz_per_c: line.slope, intercept_hz: line.intercept, rmse_c: 0.0 };
    let sq: f64 = pairs.iter().map(|&(t, f)| (model.estimate_temperature(f) - t).powi(2)).sum();
    model.rmse_c = (sq / pairs.len() as f64).sqrt();
    Ok(model)
}

/// |estimated - reported| temperature, the statistic thresholded for alarms.
pub fn temperature_score(model: &TempModel, fb_hz: f64, reading_c: f64) -> Result<f64, DetectError> {
    if model.slope_hz_per_c.abs() < MIN_SLOPE_HZ_PER_C {
        return Err(DetectError::DegenerateModel(model.slope_hz_per_c));
    }
    Ok((model.estimate_temperature(fb_hz) - reading_c).abs())
}

pub fn check_temp_consistency(
    profile: &DeviceProfile,
    obs: &FrameObservation,
    temp_threshold_c: f64,
) -> Result<Verdict, DetectError> {
    profile.check_device(obs)?;
    if !(temp_threshold_c.is_finite() && temp_threshold_c > 0.0) {
        return Err(DetectError::Parameter("temperature threshold must be positive"));
    }
    let model = profile.temp_model.as_ref().ok_or(DetectError::NoTemperatureModel)?;
    let reading = obs.temp_reading.ok_or(DetectError::NoTemperatureReading)?;
    let score = temperature_score(model, obs.fb.delta_hz, reading)?;
    Ok(if score > temp_threshold_c { Verdict::TemperatureMismatch } else { Verdict::Accept })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold_c: f64,
    /// Alarmed share of attacked frames.
    pub tpr: f64,
    /// Alarmed share of honest frames.
    pub fpr: f64,
}

/// One point per threshold; alarm iff score > threshold.
pub fn roc_curve(honest_scores: &[f64], attack_scores: &[f64], thresholds: &[f64]) -> Vec<RocPoint> {
    let share = |scores: &[f64], th: f64| {
        if scores.is_empty() {
            0.0
        } else {
            scores.iter().filter(|&&s| s > th).count() as f64 / scores.len() as f64
        }
    };
    thresholds
        .iter()
        .map(|&th| RocPoint { threshold_c: th, tpr: share(attack_scores, th), fpr: share(honest_scores, th) })
        .collect()
}

/// Synthetic non-compensated crystal: linear bias in temperature plus
/// Gaussian bias noise, with sensor readings quantized to `resolution_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempSynth {
    pub slope_hz_per_c: f64,
    pub intercept_hz: f64,
    pub temp_range_c: (f64, f64),
    pub fb_noise_hz: f64,
    pub resolution_c: f64,
}

impl Default for TempSynth {
    /// 800 Hz/C over 25-30 C; 74 Hz noise gives a 100 Hz interquartile spread.
    fn default() -> Self {
        Self {
            slope_hz_per_c: 800.0,
            intercept_hz: -40_000.0,
            temp_range_c: (25.0, 30.0),
            fb_noise_hz: 74.0,
            resolution_c: 0.1,
        }
    }
}

impl TempSynth {
    /// `count` (reading, bias) pairs.
    pub fn pairs(&self, count: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.fb_noise_hz).expect("finite noise");
        let (lo, hi) = self.temp_range_c;
        (0..count)
            .map(|_| {
                let t: f64 = rng.random_range(lo..=hi);
                let fb = self.slope_hz_per_c * t + self.intercept_hz + noise.sample(&mut rng);
                (self.quantize(t), fb)
            })
            .collect()
    }

    fn quantize(&self, t: f64) -> f64 {
        if self.resolution_c > 0.0 {
            (t / self.resolution_c).round() * self.resolution_c
        } else {
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_rmse() {
        let pairs: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = 25.0 + i as f64 * 0.1;
                (t, 800.0 * t - 40_000.0)
            })
            .collect();
        let m = fit_temp_model(&pairs).unwrap();
        assert!((m.slope_hz_per_c - 800.0).abs() < 1e-9);
        assert!(m.rmse_c < 1e-9);
    }

    #[test]
    fn narrow_or_short_data_is_rejected() {
        let flat: Vec<(f64, f64)> = (0..40).map(|i| (26.0, i as f64)).collect();
        assert!(matches!(fit_temp_model(&flat), Err(DetectError::TemperatureSpread(_))));
        let short: Vec<(f64, f64)> = (0..10).map(|i| (25.0 + i as f64, 0.0)).collect();
        assert!(matches!(fit_temp_model(&short), Err(DetectError::TooFewPairs { .. })));
    }

    #[test]
    fn roc_counts_strict_exceedance() {
        let roc = roc_curve(&[0.1, 0.2], &[0.2, 0.9], &[0.2]);
        assert_eq!(roc[0].fpr, 0.0);
        assert_eq!(roc[0].tpr, 0.5);
    }
}
