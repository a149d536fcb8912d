//! Fourier inversion of characteristic functions onto evaluation grids.

use crate::distributions::Decay;
use crate::error::{invalid, Error, Result};
use crate::lattice::twisted::TwistedSummer;
use crate::special::gauss_legendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One axis of a uniform grid: `count` points from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || count == 0 {
            return Err(invalid("grid bounds must be finite and count positive"));
        }
        if count == 1 && min != max {
            return Err(invalid("a single-point axis needs min == max"));
        }
        if count > 1 && max <= min {
            return Err(invalid("grid max must exceed min"));
        }
        Ok(Self { min, max, count })
    }

    pub fn step(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }

    /// The `i`-th point, computed so that both endpoints are hit exactly.
    pub fn point(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.min;
        }
        let n1 = (self.count - 1) as f64;
        (self.min * (n1 - i as f64) + self.max * i as f64) / n1
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Tensor grid, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(invalid("grid needs at least one axis"));
        }
        Ok(Self { axes })
    }

    /// `dim` identical axes.
    pub fn cube(dim: usize, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis::new(min, max, count)?; dim])
    }

    /// `x ∈ [-5, 5]` with 1001 points.
    pub fn default_1d() -> Self {
        Self { axes: vec![Axis { min: -5.0, max: 5.0, count: 1001 }] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.point(flat % axis.count);
            flat /= axis.count;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMeta {
    pub n_used: Option<u64>,
    pub truncation_radius: f64,
    pub est_tail_error: f64,
    pub method: String,
}

/// Density values on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridDensity {
    pub dim: usize,
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

impl GridDensity {
    pub fn grid(&self) -> GridSpec {
        GridSpec { axes: self.axes.clone() }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.grid().point(flat)
    }

    /// Trapezoid integral of `g(x, value)` over the grid.
    pub fn integrate_with<F: Fn(&[f64], f64) -> f64>(&self, g: F) -> f64 {
        let grid = self.grid();
        let steps: Vec<f64> = self.axes.iter().map(Axis::step).collect();
        let mut total = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            let mut idx = flat;
            let mut w = 1.0;
            for (k, axis) in self.axes.iter().enumerate().rev() {
                let i = idx % axis.count;
                idx /= axis.count;
                if axis.count > 1 {
                    w *= if i == 0 || i + 1 == axis.count { 0.5 * steps[k] } else { steps[k] };
                }
            }
            total += w * g(&grid.point(flat), v);
        }
        total
    }

    pub fn total_mass(&self) -> f64 {
        self.integrate_with(|_, v| v)
    }
}

/// Upper estimate of `(2π)^{-d} ∫_{|t|>R} |cf(t)| dt`, assuming monotone decay
/// of the sampled shell maxima. Returns `+∞` when no decay is detected.
pub fn estimate_tail(cf: &(dyn Fn(&[f64]) -> Complex64 + Sync), dim: usize, r: f64) -> f64 {
    const PER_OCTAVE: usize = 16;
    const OCTAVES: usize = 12;
    let directions: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 64.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => return f64::INFINITY,
    };
    let radii: Vec<f64> = (0..=PER_OCTAVE * OCTAVES)
        .map(|j| r * 2f64.powf(j as f64 / PER_OCTAVE as f64))
        .collect();
    let mut m: Vec<f64> = radii
        .iter()
        .map(|&rad| {
            directions
                .iter()
                .map(|d| cf(&d.iter().map(|c| c * rad).collect::<Vec<_>>()).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    // Monotone hull from the right.
    for j in (0..m.len() - 1).rev() {
        m[j] = m[j].max(m[j + 1]);
    }
    if m[0] == 0.0 {
        return 0.0;
    }
    let surface = |rad: f64| if dim == 1 { 2.0 } else { 2.0 * PI * rad };
    let mut total = 0.0;
    for j in 0..radii.len() - 1 {
        total += m[j] * (radii[j + 1] - radii[j]) * surface(radii[j + 1]);
    }
    let last = *m.last().unwrap();
    if last > 0.0 {
        let n = m.len();
        let prev = m[n - 1 - PER_OCTAVE];
        if prev <= last {
            return f64::INFINITY;
        }
        let alpha = (prev / last).log2();
        if alpha <= dim as f64 + 1e-9 {
            return f64::INFINITY;
        }
        let rl = *radii.last().unwrap();
        let shell = if dim == 1 { 2.0 } else { 2.0 * PI };
        total += shell * last * rl.powi(dim as i32) / (alpha - dim as f64);
    }
    total / (2.0 * PI).powi(dim as i32)
}

/// Composite trapezoid inversion over the cube `[-R, R]^d`:
/// `p(x) = (2π)^{-d} ∫ e^{-i⟨t,x⟩} cf(t) dt`.
pub fn invert(
    cf: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    dim: usize,
    grid: &GridSpec,
    truncation_radius: f64,
    quad_step: f64,
) -> Result<GridDensity> {
    if grid.dim() != dim || !(1..=2).contains(&dim) {
        return Err(invalid("inversion supports grids of dimension 1 or 2 matching the cf"));
    }
    if !(truncation_radius > 0.0 && quad_step > 0.0 && truncation_radius.is_finite()) {
        return Err(invalid("truncation radius and quadrature step must be positive"));
    }
    let nodes_per_axis = (2.0 * truncation_radius / quad_step).round().max(1.0) as usize;
    let h = 2.0 * truncation_radius / nodes_per_axis as f64;
    let x_max = grid.axes.iter().map(Axis::max_abs).fold(0.0, f64::max);
    if h * x_max > PI / 4.0 + 1e-12 {
        return Err(invalid(format!(
            "quadrature step {h} too coarse for |x| up to {x_max}: need h·x_max <= π/4"
        )));
    }
    let t: Vec<f64> = (0..=nodes_per_axis).map(|j| -truncation_radius + j as f64 * h).collect();
    let w: Vec<f64> = (0..=nodes_per_axis)
        .map(|j| if j == 0 || j == nodes_per_axis { 0.5 * h } else { h })
        .collect();
    let norm = (2.0 * PI).powi(dim as i32);
    let values: Vec<Complex64> = match dim {
        1 => {
            let cfv: Vec<Complex64> = t.par_iter().map(|&tj| cf(&[tj])).collect();
            grid.axes[0]
                .points()
                .par_iter()
                .map(|&x| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..t.len() {
                        s += cfv[j] * Complex64::from_polar(w[j], -t[j] * x);
                    }
                    s / norm
                })
                .collect()
        }
        _ => {
            let n = t.len();
            let cfv: Vec<Complex64> = (0..n * n)
                .into_par_iter()
                .map(|idx| cf(&[t[idx / n], t[idx % n]]))
                .collect();
            (0..grid.len())
                .into_par_iter()
                .map(|flat| {
                    let x = grid.point(flat);
                    let ph1: Vec<Complex64> =
                        (0..n).map(|j| Complex64::from_polar(w[j], -t[j] * x[0])).collect();
                    let ph2: Vec<Complex64> =
                        (0..n).map(|j| Complex64::from_polar(w[j], -t[j] * x[1])).collect();
                    let mut s = Complex64::new(0.0, 0.0);
                    for a in 0..n {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for b in 0..n {
                            inner += cfv[a * n + b] * ph2[b];
                        }
                        s += ph1[a] * inner;
                    }
                    s / norm
                })
                .collect()
        }
    };
    let est_tail_error = estimate_tail(cf, dim, truncation_radius);
    finish(grid, values, None, truncation_radius, est_tail_error, "trapezoid")
}

fn finish(
    grid: &GridSpec,
    values: Vec<Complex64>,
    n_used: Option<u64>,
    truncation_radius: f64,
    est_tail_error: f64,
    method: &str,
) -> Result<GridDensity> {
    let worst = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if worst > 1e-6 {
        return Err(Error::InconsistentCf(format!(
            "inverted values carry an imaginary part of {worst:.3e}"
        )));
    }
    Ok(GridDensity {
        dim: grid.dim(),
        axes: grid.axes.clone(),
        values: values.into_iter().map(|v| v.re).collect(),
        meta: GridMeta {
            n_used,
            truncation_radius,
            est_tail_error,
            method: method.to_string(),
        },
    })
}

/// One-dimensional inversion `(1/2π) ∫_{-R}^{R} e^{-itx} cf(t) dt` by
/// Gauss-Legendre panels, with panel breaks at the given kinks of `cf`.
pub fn invert_panels(
    cf: &(dyn Fn(f64) -> Complex64 + Sync),
    radius: f64,
    kinks: &[f64],
    xs: &[f64],
) -> Vec<Complex64> {
    const ORDER: usize = 20;
    let (gx, gw) = gauss_legendre(ORDER);
    let x_max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let width = (4.0 / x_max.max(1e-300)).min(1.0);
    let mut cuts = vec![-radius, radius];
    cuts.extend(kinks.iter().copied().filter(|k| k.abs() < radius));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for seg in cuts.windows(2) {
        let panels = ((seg[1] - seg[0]) / width).ceil().max(1.0) as usize;
        let pw = (seg[1] - seg[0]) / panels as f64;
        for p in 0..panels {
            let a = seg[0] + p as f64 * pw;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(a + 0.5 * pw * (x + 1.0));
                weights.push(0.5 * pw * w);
            }
        }
    }
    let cfw: Vec<Complex64> = nodes.par_iter().zip(&weights).map(|(&t, &w)| cf(t) * w).collect();
    xs.par_iter()
        .map(|&x| {
            let mut s = Complex64::new(0.0, 0.0);
            for (c, &t) in cfw.iter().zip(&nodes) {
                s += c * Complex64::from_polar(1.0, -t * x);
            }
            s / (2.0 * PI)
        })
        .collect()
}

/// Density of `Z_n` at `xs` for one-dimensional Bernoulli noise, where the
/// source cf `f` has decay model `decay` and the source density is
/// negligible beyond `density_radius`.
///
/// With `s = t/√n` and `y = x√n` the inversion integral folds onto one
/// period of `cos`:
/// `p_n(x) = (√n/2π) ∫_{-π/2}^{π/2} e^{-iuy} cos^n(u) G(u) du`, where
/// `G(u) = Σ_k e^{iπk(n-y)} f(πk + u)`. The folded integrand is periodic, so
/// the trapezoid rule converges geometrically; it aliases the density of
/// `X + X_1 + ... + X_n` with period `2M`, which is chosen beyond its support.
pub fn invert_bernoulli_folded(
    f: &(dyn Fn(f64) -> Complex64 + Sync),
    decay: &Decay,
    density_radius: f64,
    n: u64,
    xs: &[f64],
) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if !density_radius.is_finite() {
        return Err(invalid("folded inversion needs a source density with light tails"));
    }
    let sqrt_n = (n as f64).sqrt();
    let n_i32 = i32::try_from(n).map_err(|_| invalid("n too large"))?;
    xs.par_iter()
        .map(|&x| {
            let y = x * sqrt_n;
            let turns = 0.5 * (n as f64 - y);
            let m = ((n as f64 + y.abs() + density_radius) / 2.0).ceil() as usize + 8;
            let eta = PI / m as f64;
            let summer = TwistedSummer::new(decay, PI, turns, 1e-18);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                let u = -PI / 2.0 + j as f64 * eta;
                let c = u.cos().max(0.0).powi(n_i32);
                if c == 0.0 {
                    continue;
                }
                let g = summer.sum(f, u)?.value;
                acc += g * Complex64::from_polar(c, -u * y);
            }
            Ok(acc * (sqrt_n * eta / (2.0 * PI)))
        })
        .collect()
}

pub(crate) fn finish_1d(
    grid: &GridSpec,
    values: Vec<Complex64>,
    n_used: Option<u64>,
    truncation_radius: f64,
    est_tail_error: f64,
    method: &str,
) -> Result<GridDensity> {
    finish(grid, values, n_used, truncation_radius, est_tail_error, method)
}
