//! Differential evolution (`best/1/bin`) with Latin-hypercube initialization.
//!
//! Trial vectors for a generation are drawn sequentially from one seeded
//! stream, evaluated (possibly in parallel, order preserved), then selected
//! sequentially. The result is therefore bit-identical for any thread count.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub max_generations: usize,
    /// Mutation factor drawn per generation from `[lo, hi)`.
    pub mutation: (f64, f64),
    pub crossover: f64,
    /// Stop when `std(energies) <= atol + tol * |mean(energies)|`.
    pub tol: f64,
    pub atol: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 30,
            max_generations: 200,
            mutation: (0.5, 1.0),
            crossover: 0.7,
            tol: 1e-8,
            atol: 0.0,
            seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub x: Vec<f64>,
    pub fun: f64,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn evaluate<F>(f: &F, points: &[Vec<f64>], parallel: bool) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if parallel {
        points.par_iter().map(|p| f(p)).collect()
    } else {
        points.iter().map(|p| f(p)).collect()
    }
}

fn argmin(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |b, (i, &e)| if e < v[b] { i } else { b })
}

/// Minimizes `f` over the box `bounds`. Out-of-box trial coordinates are
/// redrawn uniformly inside the box.
pub fn minimize<F>(f: F, bounds: &[(f64, f64)], cfg: &DeConfig) -> DeResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let np = cfg.population.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Latin hypercube: one point per stratum in every dimension.
    let mut pop = vec![vec![0.0; dim]; np];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..np).collect();
        strata.shuffle(&mut rng);
        for (i, s) in strata.into_iter().enumerate() {
            let u = (s as f64 + rng.random::<f64>()) / np as f64;
            pop[i][d] = lo + u * (hi - lo);
        }
    }
    let mut energy = evaluate(&f, &pop, cfg.parallel);
    let mut evaluations = np;
    let mut best = argmin(&energy);
    let mut converged = false;
    let mut generations = 0;

    while generations < cfg.max_generations {
        if spread_converged(&energy, cfg) {
            converged = true;
            break;
        }
        generations += 1;
        let scale = rng.random_range(cfg.mutation.0..cfg.mutation.1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let (r1, r2) = loop {
                    let a = rng.random_range(0..np);
                    let b = rng.random_range(0..np);
                    if a != b && a != i && b != i {
                        break (a, b);
                    }
                };
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|d| {
                        let (lo, hi) = bounds[d];
                        let cross = d == forced || rng.random::<f64>() < cfg.crossover;
                        let v = if cross { pop[best][d] + scale * (pop[r1][d] - pop[r2][d]) } else { pop[i][d] };
                        if (lo..=hi).contains(&v) {
                            v
                        } else {
                            lo + rng.random::<f64>() * (hi - lo)
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_energy = evaluate(&f, &trials, cfg.parallel);
        evaluations += np;
        for (i, (t, e)) in trials.into_iter().zip(trial_energy).enumerate() {
            if e <= energy[i] {
                pop[i] = t;
                energy[i] = e;
            }
        }
        best = argmin(&energy);
    }
    DeResult { x: pop[best].clone(), fun: energy[best], generations, evaluations, converged }
}

fn spread_converged(energy: &[f64], cfg: &DeConfig) -> bool {
    let n = energy.len() as f64;
    let mean = energy.iter().sum::<f64>() / n;
    let var = energy.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() <= cfg.atol + cfg.tol * mean.abs()
}
