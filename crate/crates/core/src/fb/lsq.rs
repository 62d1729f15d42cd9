//! Least-squares fit of the full chirp model.
//!
//! ```text
//! J(fb, theta) = sum_n (Q_n - A sin P_n)^2 + (I_n - A cos P_n)^2
//! P_n = sweep(t_n) + 2*pi*fb*t_n + theta
//! ```
//!
//! Expanding the squares gives
//! `J = sum|x|^2 + N*A^2 - 2A * Re(exp(-j*theta) * C(fb))` with
//! `C(fb) = sum_n x_n exp(-j*sweep(t_n)) exp(-j*2*pi*fb*t_n)`, so one
//! evaluation is a single phasor-recurrence pass over the dechirped samples.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::de::{minimize, DeConfig};
use super::{check_band, check_chirp, Estimator, FbError, FbEstimate, FbWarning};
use crate::dsp::dft_at;
use crate::signal::{demod::dechirp, mean_power, up_sweep_phase, IqTrace, PhyParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsqConfig {
    pub population: usize,
    pub max_generations: usize,
    pub delta_bounds: (f64, f64),
    pub theta_bounds: (f64, f64),
    pub seed: u64,
    /// Complex-envelope magnitude; `None` uses the chirp's RMS.
    pub amplitude: Option<f64>,
    pub tol: f64,
    /// Refine the best bias by golden-section search inside its lobe.
    pub polish: bool,
    /// Also try the strongest lobe of a quarter-bin `|C(fb)|` scan and keep
    /// whichever candidate has the lower objective.
    pub lobe_scan: bool,
    pub parallel: bool,
}

impl Default for LsqConfig {
    fn default() -> Self {
        Self {
            population: 30,
            max_generations: 200,
            delta_bounds: (-30e3, 30e3),
            theta_bounds: (0.0, TAU),
            seed: 0,
            amplitude: None,
            tol: 1e-8,
            polish: true,
            lobe_scan: true,
            parallel: true,
        }
    }
}

impl LsqConfig {
    pub fn validate(&self) -> Result<(), FbError> {
        let finite = |b: (f64, f64)| b.0.is_finite() && b.1.is_finite() && b.0 < b.1;
        if !finite(self.delta_bounds) || !finite(self.theta_bounds) {
            return Err(FbError::Config("bounds must be finite and ordered"));
        }
        if self.population < 15 {
            return Err(FbError::Config("population must be at least 15"));
        }
        if let Some(a) = self.amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(FbError::Config("amplitude must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Precomputed dechirped samples for fast objective evaluation.
pub struct LsqProblem {
    dechirped: Vec<Complex64>,
    energy: f64,
    amplitude: f64,
    sample_rate: f64,
}

impl LsqProblem {
    pub fn new(chirp: &IqTrace, phy: &PhyParams, amplitude: f64) -> Self {
        Self {
            dechirped: dechirp(&chirp.samples, phy, chirp.sample_rate, 0.0),
            energy: chirp.samples.iter().map(|z| z.norm_sqr()).sum(),
            amplitude,
            sample_rate: chirp.sample_rate,
        }
    }

    pub fn correlation(&self, delta_hz: f64) -> Complex64 {
        dft_at(&self.dechirped, delta_hz, self.sample_rate)
    }

    pub fn objective(&self, delta_hz: f64, theta: f64) -> f64 {
        let c = self.correlation(delta_hz);
        let n = self.dechirped.len() as f64;
        let a = self.amplitude;
        self.energy + n * a * a - 2.0 * a * (Complex64::from_polar(1.0, -theta) * c).re
    }

    /// Phase minimizing the objective at `delta_hz`, in `[0, 2*pi)`.
    pub fn best_theta(&self, delta_hz: f64) -> f64 {
        self.correlation(delta_hz).arg().rem_euclid(TAU)
    }
}

/// Direct evaluation of the objective, sample by sample.
pub fn lsq_objective(chirp: &IqTrace, phy: &PhyParams, amplitude: f64, delta_hz: f64, theta: f64) -> f64 {
    chirp
        .samples
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let t = j as f64 / chirp.sample_rate;
            let p = up_sweep_phase(phy, t) + TAU * delta_hz * t + theta;
            (x.im - amplitude * p.sin()).powi(2) + (x.re - amplitude * p.cos()).powi(2)
        })
        .sum()
}

/// Maximizes `|C(fb)|` on `[lo, hi]`; unimodal inside one lobe.
fn golden_section(problem: &LsqProblem, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = problem.correlation(a).norm();
    let mut fb = problem.correlation(b).norm();
    for _ in 0..80 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = problem.correlation(b).norm();
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = problem.correlation(a).norm();
        }
    }
    (lo + hi) / 2.0
}

pub fn estimate_fb_lsq(chirp: &IqTrace, phy: &PhyParams, cfg: &LsqConfig) -> Result<FbEstimate, FbError> {
    check_chirp(chirp, phy)?;
    cfg.validate()?;
    let amplitude = cfg.amplitude.unwrap_or_else(|| mean_power(&chirp.samples).sqrt());
    let problem = LsqProblem::new(chirp, phy, amplitude);
    let de = DeConfig {
        population: cfg.population,
        max_generations: cfg.max_generations,
        tol: cfg.tol,
        seed: cfg.seed,
        parallel: cfg.parallel,
        ..DeConfig::default()
    };
    let result = minimize(|x: &[f64]| problem.objective(x[0], x[1]), &[cfg.delta_bounds, cfg.theta_bounds], &de);
    let (mut delta, mut theta, mut objective) = (result.x[0], result.x[1], result.fun);
    if cfg.polish {
        let half = phy.bin_width_hz() / 2.0;
        let (lo, hi) = cfg.delta_bounds;
        let d = golden_section(&problem, (delta - half).max(lo), (delta + half).min(hi));
        let t = problem.best_theta(d);
        let j = problem.objective(d, t);
        if j <= objective {
            (delta, theta, objective) = (d, t, j);
        }
    }
    if cfg.lobe_scan {
        let step = phy.bin_width_hz() / 4.0;
        let (lo, hi) = cfg.delta_bounds;
        let steps = ((hi - lo) / step).ceil() as usize;
        let peak = (0..=steps)
            .map(|k| (lo + k as f64 * step).min(hi))
            .map(|d| (d, problem.correlation(d).norm()))
            .fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        let d = golden_section(&problem, (peak.0 - step).max(lo), (peak.0 + step).min(hi));
        let t = problem.best_theta(d);
        let j = problem.objective(d, t);
        if j < objective {
            (delta, theta, objective) = (d, t, j);
        }
    }
    let (lo, hi) = cfg.delta_bounds;
    let edge = 1e-6 * (hi - lo);
    let at_bound = delta - lo <= edge || hi - delta <= edge;
    if at_bound {
        log::warn!("LSQ bias estimate {delta:.1} Hz lies on a search bound");
    }
    Ok(FbEstimate {
        delta_hz: check_band(delta, phy)?,
        estimator: Estimator::Lsq,
        residual: objective,
        theta_rad: Some(theta.rem_euclid(TAU)),
        snr_db: None,
        warning: at_bound.then_some(FbWarning::BoundarySolution),
    })
}
