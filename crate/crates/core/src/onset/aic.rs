//! Autoregressive AIC change-point picker.
//!
//! For every split `k`, an AR(p) model with intercept is least-squares fitted
//! on each side, by default to the I and Q sequences with shared real
//! coefficients, and
//!
//! ```text
//! AIC(k) = (k - p) * ln(var1) + (N - k - p) * ln(var2)
//! ```
//!
//! is minimized. Prefix sums of the regression moments make each candidate
//! O(p^3), so every split is evaluated exactly.

use serde::{Deserialize, Serialize};

use super::{Detector, OnsetError, OnsetResult};
use crate::signal::IqTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AicConfig {
    /// AR order, 1..=4.
    pub order: usize,
    /// Minimum samples on either side of a split.
    pub min_segment: usize,
    pub input: AicInput,
}

impl Default for AicConfig {
    fn default() -> Self {
        Self { order: 2, min_segment: 256, input: AicInput::Components }
    }
}

/// Sequence the AR models are fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AicInput {
    /// I and Q with shared real coefficients; invariant to carrier phase.
    Components,
    /// `|I + jQ|`; blind to the sweep, so a smooth start is split at its end.
    Magnitude,
}

pub fn detect_aic(trace: &IqTrace) -> Result<OnsetResult, OnsetError> {
    detect_aic_with(trace, &AicConfig::default())
}

pub fn detect_aic_with(trace: &IqTrace, cfg: &AicConfig) -> Result<OnsetResult, OnsetError> {
    assert!((1..=4).contains(&cfg.order), "AR order must be 1..=4");
    let min = 2 * cfg.min_segment.max(cfg.order + 2);
    if trace.len() < min {
        return Err(OnsetError::TooShort { len: trace.len(), min });
    }
    let i: Vec<f64> = trace.samples.iter().map(|z| z.re).collect();
    let q: Vec<f64> = trace.samples.iter().map(|z| z.im).collect();
    let constant = |x: &[f64]| {
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        hi - lo <= hi.abs().max(lo.abs()) * 1e-12
    };
    if constant(&i) && constant(&q) {
        return Err(OnsetError::NoOnset("constant trace"));
    }
    let curve = match cfg.input {
        AicInput::Components => aic_curve(&[&i, &q], cfg),
        AicInput::Magnitude => {
            let mag: Vec<f64> = trace.samples.iter().map(|z| z.norm()).collect();
            aic_curve(&[&mag], cfg)
        }
    };
    let (mut best, mut best_val, mut worst_val) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &v) in curve.iter().enumerate() {
        if v < best_val {
            best = i;
            best_val = v;
        }
        worst_val = worst_val.max(v);
    }
    let onset = cfg.min_segment.max(cfg.order + 2) + best;
    let score = (worst_val - best_val) / trace.len() as f64;
    Ok(OnsetResult::new(trace, Detector::Aic, onset, score))
}

/// AIC for splits `k = m, m+1, .., N - m` with `m = max(min_segment, p + 2)`.
pub(crate) fn aic_curve(channels: &[&[f64]], cfg: &AicConfig) -> Vec<f64> {
    let p = cfg.order;
    let n = channels[0].len();
    let mut spread = 0.0;
    let centered: Vec<Vec<f64>> = channels
        .iter()
        .map(|x| {
            let mean = x.iter().sum::<f64>() / n as f64;
            spread += x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            x.iter().map(|v| v - mean).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = centered.iter().map(|c| c.as_slice()).collect();
    let moments = Moments::new(&refs, p);
    // Variance floor keeps ln finite on noiseless, piecewise-constant input.
    let floor = spread.max(f64::MIN_POSITIVE) * 1e-14;
    let m = cfg.min_segment.max(p + 2);
    (m..=n - m)
        .map(|k| {
            let c1 = (k - p) as f64;
            let c2 = (n - k - p) as f64;
            let v1 = (moments.rss(0, k) / c1).max(floor);
            let v2 = (moments.rss(k, n) / c2).max(floor);
            c1 * v1.ln() + c2 * v2.ln()
        })
        .collect()
}

/// Prefix sums of `z_t z_t^T` with `z_t = (1, x[t-1], .., x[t-p], x[t])`.
struct Moments {
    dim: usize,
    /// Row `t` holds sums over regression targets `p <= t' < t`.
    prefix: Vec<f64>,
}

impl Moments {
    /// Channels share one set of AR coefficients; their moments add.
    fn new(channels: &[&[f64]], p: usize) -> Self {
        let dim = p + 2;
        let width = dim * dim;
        let len = channels[0].len();
        let mut prefix = vec![0.0; (len + 1) * width];
        let mut z = vec![0.0; dim];
        for t in 0..len {
            let (done, rest) = prefix.split_at_mut((t + 1) * width);
            let prev = &done[t * width..];
            let row = &mut rest[..width];
            row.copy_from_slice(prev);
            if t >= p {
                for x in channels {
                    z[0] = 1.0;
                    for lag in 1..=p {
                        z[lag] = x[t - lag];
                    }
                    z[dim - 1] = x[t];
                    for i in 0..dim {
                        for j in 0..dim {
                            row[i * dim + j] += z[i] * z[j];
                        }
                    }
                }
            }
        }
        Self { dim, prefix }
    }

    /// Residual sum of squares of the AR fit over targets `t` in `[a + p, b)`.
    fn rss(&self, a: usize, b: usize) -> f64 {
        let dim = self.dim;
        let p = dim - 2;
        let width = dim * dim;
        let hi = &self.prefix[b * width..(b + 1) * width];
        let lo = &self.prefix[(a + p) * width..(a + p + 1) * width];
        let s = |i: usize, j: usize| hi[i * dim + j] - lo[i * dim + j];
        let k = dim - 1;
        let mut g = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                g[i][j] = s(i, j);
            }
            g[i][k] = s(i, k);
        }
        let syy = s(k, k);
        match solve(&mut g) {
            Some(beta) => (syy - (0..k).map(|i| beta[i] * s(i, k)).sum::<f64>()).max(0.0),
            None => {
                // Singular regressors: fall back to an intercept-only fit.
                let n = s(0, 0);
                (syy - s(0, k) * s(0, k) / n).max(0.0)
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented `k x (k+1)` system.
fn solve(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let k = a.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= scale * 1e-13 {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    let mut beta = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * beta[c]).sum();
        beta[row] = (a[row][k] - tail) / a[row][row];
    }
    Some(beta)
}
