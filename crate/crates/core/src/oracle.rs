//! Independent ground truth: the exact binomial mixture for Bernoulli noise
//! and a seeded Monte Carlo kernel estimate for any noise.

use crate::distributions::{NoiseDistribution, SourceDistribution};
use crate::error::{invalid, unsupported, Result};
use crate::smoothing::SmoothedModel;
use crate::special::{ln_binomial, log_sum_exp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

/// Binomial law of `(S_n + n)/2`, `S_n = X_1 + ... + X_n`, in log form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureWeights {
    pub n: u64,
    pub log_weights: Vec<f64>,
}

impl MixtureWeights {
    pub fn new(n: u64) -> Self {
        let raw: Vec<f64> = (0..=n).map(|j| ln_binomial(n, j) - n as f64 * LN_2).collect();
        // Remove the residual rounding so the weights sum to one.
        let shift = log_sum_exp(&raw);
        Self { n, log_weights: raw.into_iter().map(|w| w - shift).collect() }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }
}

fn mixture_1d(source: &crate::distributions::Family, w: &[f64], n: u64, x: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let y = x * sqrt_n;
    let mut acc = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        let s = 2.0 * j as f64 - n as f64;
        acc += wj * source.density(y - s);
    }
    sqrt_n * acc
}

/// `√n Σ_j C(n,j) 2^{-n} p(x√n - (2j - n))`.
pub fn exact_mixture_density(source: &SourceDistribution, n: u64, x: f64) -> Result<f64> {
    let fam = source.family()?;
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    Ok(mixture_1d(fam, &MixtureWeights::new(n).weights(), n, x))
}

/// Exact density for several points, reusing the weights.
pub fn exact_mixture_density_many(source: &SourceDistribution, n: u64, xs: &[f64]) -> Result<Vec<f64>> {
    let fam = source.family()?;
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let w = MixtureWeights::new(n).weights();
    Ok(xs.iter().map(|&x| mixture_1d(fam, &w, n, x)).collect())
}

/// Two-dimensional mixture over the Bernoulli cube; `(n+1)²` terms.
pub fn exact_mixture_density_2d(source: &SourceDistribution, n: u64, x: [f64; 2]) -> Result<f64> {
    if source.dim() != 2 {
        return Err(invalid("expected a two-dimensional product source"));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if n > 256 {
        return Err(unsupported(format!("n = {n} exceeds the 2-d mixture limit of 256")));
    }
    let w = MixtureWeights::new(n).weights();
    let sqrt_n = (n as f64).sqrt();
    let y = [x[0] * sqrt_n, x[1] * sqrt_n];
    let mut acc = 0.0;
    for (j1, &w1) in w.iter().enumerate() {
        let s1 = 2.0 * j1 as f64 - n as f64;
        for (j2, &w2) in w.iter().enumerate() {
            let s2 = 2.0 * j2 as f64 - n as f64;
            acc += w1 * w2 * source.density(&[y[0] - s1, y[1] - s2]);
        }
    }
    Ok(n as f64 * acc)
}

/// Kernel density estimate with per-point standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub bandwidth: f64,
    pub samples: usize,
    pub seed: u64,
}

const CHUNK: usize = 65_536;

fn draw<R: Rng + ?Sized>(model: &SmoothedModel, n: u64, binom: Option<&Binomial>, rng: &mut R) -> Vec<f64> {
    let mut z = model.source.sample(rng);
    for (axis, zi) in z.iter_mut().enumerate() {
        match (&model.noise, binom) {
            (NoiseDistribution::Bernoulli { .. }, Some(b)) => {
                *zi += 2.0 * b.sample(rng) as f64 - n as f64;
            }
            _ => {
                for _ in 0..n {
                    *zi += model.noise.sample_axis(axis, rng);
                }
            }
        }
    }
    let sqrt_n = (n as f64).sqrt();
    z.iter_mut().for_each(|v| *v /= sqrt_n);
    z
}

/// Gaussian-kernel estimate of the density of `Z_n` at `x_points` from
/// `samples` draws. Chunk `c` of the sample uses stream `c` of a ChaCha8
/// generator keyed by `seed`, so the result does not depend on threading.
/// Without a bandwidth, Silverman's rule on the sample is used.
pub fn monte_carlo_density(
    model: &SmoothedModel,
    n: u64,
    x_points: &[Vec<f64>],
    samples: usize,
    bandwidth: Option<f64>,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let d = model.dim();
    if x_points.iter().any(|x| x.len() != d) {
        return Err(invalid("probe point dimension does not match the model"));
    }
    if let Some(h) = bandwidth {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("bandwidth must be positive"));
        }
    }
    let binom = if model.noise.is_bernoulli() {
        Some(Binomial::new(n, 0.5).map_err(|e| invalid(e.to_string()))?)
    } else {
        None
    };
    let chunks = samples.div_ceil(CHUNK);
    let draws: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut out = Vec::with_capacity(count * d);
            for _ in 0..count {
                out.extend(draw(model, n, binom.as_ref(), &mut rng));
            }
            out
        })
        .collect();
    let h = match bandwidth {
        Some(h) => h,
        None => {
            // Silverman's rule with the sample spread averaged over coordinates.
            let mut sd = 0.0;
            for axis in 0..d {
                let (mut s1, mut s2) = (0.0, 0.0);
                for chunk in &draws {
                    for z in chunk.iter().skip(axis).step_by(d) {
                        s1 += z;
                        s2 += z * z;
                    }
                }
                let m = s1 / samples as f64;
                sd += ((s2 / samples as f64 - m * m).max(0.0)).sqrt() / d as f64;
            }
            let dd = d as f64;
            sd * (4.0 / (dd + 2.0)).powf(1.0 / (dd + 4.0)) * (samples as f64).powf(-1.0 / (dd + 4.0))
        }
    };
    if h.is_nan() || h <= 0.0 {
        return Err(invalid("degenerate sample; bandwidth would be zero"));
    }
    let norm = (2.0 * PI * h * h).powf(-(d as f64) / 2.0);
    let per_chunk: Vec<Vec<(f64, f64)>> = draws
        .par_iter()
        .map(|chunk| {
            x_points
                .iter()
                .map(|x| {
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for z in chunk.chunks_exact(d) {
                        let r2: f64 = z.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                        let k = norm * (-0.5 * r2 / (h * h)).exp();
                        s1 += k;
                        s2 += k * k;
                    }
                    (s1, s2)
                })
                .collect()
        })
        .collect();
    let nf = samples as f64;
    let mut values = Vec::with_capacity(x_points.len());
    let mut std_errors = Vec::with_capacity(x_points.len());
    for i in 0..x_points.len() {
        let (s1, s2) = per_chunk.iter().fold((0.0, 0.0), |acc, c| (acc.0 + c[i].0, acc.1 + c[i].1));
        let mean = s1 / nf;
        let var = (s2 / nf - mean * mean).max(0.0);
        values.push(mean);
        std_errors.push((var / nf).sqrt());
    }
    Ok(MonteCarloEstimate { values, std_errors, bandwidth: h, samples, seed })
}
