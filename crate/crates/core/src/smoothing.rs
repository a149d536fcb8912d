//! Densities of `Z_n = (X + X_1 + ... + X_n)/√n`, distances to the standard
//! Gaussian and convergence studies.

use crate::distributions::{Decay, Family, NoiseDistribution, SourceDistribution};
use crate::error::{invalid, Result};
use crate::inversion::{self, estimate_tail, Axis, GridDensity, GridSpec};
use crate::lattice::check_pi_lattice_zeros;
use crate::special::least_squares_slope;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::PI;

/// Source `X` smoothed by `n` independent copies of the noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedModel {
    pub source: SourceDistribution,
    pub noise: NoiseDistribution,
}

impl SmoothedModel {
    pub fn new(source: SourceDistribution, noise: NoiseDistribution) -> Result<Self> {
        if source.dim() != noise.dim() {
            return Err(invalid(format!(
                "source dimension {} differs from noise dimension {}",
                source.dim(),
                noise.dim()
            )));
        }
        Ok(Self { source, noise })
    }

    /// Source smoothed by the Bernoulli cube of matching dimension.
    pub fn bernoulli(source: SourceDistribution) -> Self {
        let dim = source.dim();
        Self { source, noise: NoiseDistribution::Bernoulli { dim } }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }
}

/// `v^n` through the logarithm of `|v|` with the phase tracked separately.
fn stable_power(v: Complex64, n: u64) -> Complex64 {
    if v.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if v.im == 0.0 && v.re > 0.0 {
        return Complex64::new((n as f64 * v.re.ln()).exp(), 0.0);
    }
    let (r, arg) = v.to_polar();
    let turns = (n as f64 * arg / (2.0 * PI)).fract();
    Complex64::from_polar((n as f64 * r.ln()).exp(), 2.0 * PI * turns)
}

fn noise_power(noise: &NoiseDistribution, axis: usize, s: f64, n: u64) -> Complex64 {
    match noise {
        NoiseDistribution::Bernoulli { .. } => {
            Complex64::new(s.cos().powi(i32::try_from(n).unwrap_or(i32::MAX)), 0.0)
        }
        _ => stable_power(Complex64::new(noise.cf_axis(axis, s), 0.0), n),
    }
}

/// `f(t/√n) v(t/√n)^n`.
pub fn smoothed_cf(model: &SmoothedModel, n: u64, t: &[f64]) -> Complex64 {
    let sqrt_n = (n as f64).sqrt();
    let s: Vec<f64> = t.iter().map(|ti| ti / sqrt_n).collect();
    let mut v = model.source.cf(&s);
    for (axis, &si) in s.iter().enumerate() {
        v *= noise_power(&model.noise, axis, si, n);
    }
    v
}

struct AxisResult {
    values: Vec<Complex64>,
    radius: f64,
    tail: f64,
    method: &'static str,
}

/// One-dimensional density of `(X + X_1 + ... + X_n)/√n + bw·N(0,1)` at `xs`.
fn density_axis(
    fam: &Family,
    noise: &NoiseDistribution,
    axis: usize,
    n: u64,
    xs: &[f64],
    bandwidth: f64,
) -> Result<AxisResult> {
    let sqrt_n = (n as f64).sqrt();
    let compact = fam.cf_support_radius();
    if noise.is_bernoulli() && compact.is_none() && fam.density_tail_radius().is_finite() {
        let nb2 = n as f64 * bandwidth * bandwidth;
        let f = |s: f64| Complex64::new(fam.cf(s) * (-0.5 * nb2 * s * s).exp(), 0.0);
        let decay = if bandwidth > 0.0 {
            Decay::Gaussian { scale: 1.0, var: 1.0 / nb2 }
        } else {
            fam.cf_decay()
        };
        let radius = fam.density_tail_radius() + 9.5 * sqrt_n * bandwidth;
        let values = inversion::invert_bernoulli_folded(&f, &decay, radius, n, xs)?;
        return Ok(AxisResult { values, radius: f64::INFINITY, tail: 0.0, method: "folded-periodic" });
    }
    let g = move |t: f64| {
        let s = t / sqrt_n;
        Complex64::new(fam.cf(s) * (-0.5 * bandwidth * bandwidth * t * t).exp(), 0.0)
            * noise_power(noise, axis, s, n)
    };
    let (radius, tail) = match compact {
        Some(r) => (r * sqrt_n, 0.0),
        None => {
            let g1 = |t: &[f64]| g(t[0]);
            let mut r = 8.0;
            let mut tail = estimate_tail(&g1, 1, r);
            while tail > 1e-12 && r < 4096.0 {
                r *= 2.0;
                tail = estimate_tail(&g1, 1, r);
            }
            (r, tail)
        }
    };
    let values = inversion::invert_panels(&g, radius, &[0.0], xs);
    Ok(AxisResult { values, radius, tail, method: "gauss-legendre-panels" })
}

fn density_impl(model: &SmoothedModel, n: u64, grid: &GridSpec, bandwidth: f64) -> Result<GridDensity> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if grid.dim() != model.dim() {
        return Err(invalid("grid dimension does not match the model"));
    }
    let parts = model
        .source
        .components()
        .iter()
        .enumerate()
        .map(|(axis, fam)| {
            density_axis(fam, &model.noise, axis, n, &grid.axes[axis].points(), bandwidth)
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<Complex64> = (0..grid.len())
        .map(|flat| {
            let mut idx = flat;
            let mut v = Complex64::new(1.0, 0.0);
            for (k, axis) in grid.axes.iter().enumerate().rev() {
                v *= parts[k].values[idx % axis.count];
                idx /= axis.count;
            }
            v
        })
        .collect();
    let radius = parts.iter().map(|p| p.radius).fold(0.0, f64::max);
    let tail = parts.iter().map(|p| p.tail).sum();
    inversion::finish_1d(grid, values, Some(n), radius, tail, parts[0].method)
}

/// Density `p_n` of `Z_n` on `grid`.
pub fn density(model: &SmoothedModel, n: u64, grid: &GridSpec) -> Result<GridDensity> {
    density_impl(model, n, grid, 0.0)
}

/// `p_n` convolved with a centered Gaussian of standard deviation `bandwidth`
/// per coordinate; the expectation of a Gaussian kernel density estimate.
pub fn kernel_smoothed_density(
    model: &SmoothedModel,
    n: u64,
    grid: &GridSpec,
    bandwidth: f64,
) -> Result<GridDensity> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(invalid("bandwidth must be positive"));
    }
    density_impl(model, n, grid, bandwidth)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Sup,
}

impl std::str::FromStr for Norm {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "sup" => Ok(Norm::Sup),
            other => Err(crate::Error::Parse(format!("unknown norm: {other}"))),
        }
    }
}

/// A distance on the grid window plus a bound on what lies outside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    /// Contribution of the standard Gaussian outside the window in the same norm.
    pub out_of_window: f64,
}

pub fn std_normal_density(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-0.5 * r2).exp() / (2.0 * PI).powf(x.len() as f64 / 2.0)
}

/// Mass of `N(0, var)` per coordinate outside the grid box.
fn gaussian_mass_outside(axes: &[Axis], var: f64) -> f64 {
    let sd = var.sqrt() * std::f64::consts::SQRT_2;
    let inside: f64 = axes
        .iter()
        .map(|a| 1.0 - 0.5 * erfc(a.max / sd) - 0.5 * erfc(-a.min / sd))
        .product();
    (1.0 - inside).max(0.0)
}

pub fn distance_to_gaussian(gd: &GridDensity, norm: Norm) -> Distance {
    let d = gd.dim as i32;
    match norm {
        Norm::L1 => Distance {
            value: gd.integrate_with(|x, v| (v - std_normal_density(x)).abs()),
            out_of_window: gaussian_mass_outside(&gd.axes, 1.0),
        },
        Norm::L2 => {
            // ∫ φ² over a region equals (4π)^{-d/2} times the N(0, 1/2) mass of it.
            let outside = gaussian_mass_outside(&gd.axes, 0.5) / (4.0 * PI).powf(d as f64 / 2.0);
            Distance {
                value: gd.integrate_with(|x, v| (v - std_normal_density(x)).powi(2)).sqrt(),
                out_of_window: outside.sqrt(),
            }
        }
        Norm::Sup => {
            let diffs: Vec<f64> = gd
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - std_normal_density(&gd.point(i))).abs())
                .collect();
            let (imax, &dmax) = diffs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("grid is non-empty");
            let mut value = dmax;
            if gd.dim == 1 && imax > 0 && imax + 1 < diffs.len() {
                let (d0, d1, d2) = (diffs[imax - 1], dmax, diffs[imax + 1]);
                let curv = d0 - 2.0 * d1 + d2;
                if curv < 0.0 {
                    value = value.max(d1 - (d0 - d2).powi(2) / (8.0 * curv));
                }
            }
            let edge = gd
                .axes
                .iter()
                .map(|a| a.min.abs().min(a.max.abs()))
                .fold(f64::INFINITY, f64::min);
            Distance { value, out_of_window: std_normal_density(&[edge]) }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distances {
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_schedule: Vec<u64>,
    pub distances: Vec<Distances>,
    pub norm: Norm,
    /// Slope of log distance against log n over the whole schedule; absent
    /// when the lattice condition fails and the schedule mixes parities.
    pub fitted_log_slope: Option<f64>,
    pub even_slope: Option<f64>,
    pub odd_slope: Option<f64>,
    pub lattice_condition_holds: bool,
    pub axes: Vec<Axis>,
    pub est_tail_error: f64,
}

impl ConvergenceReport {
    pub fn selected(&self) -> Vec<f64> {
        self.distances
            .iter()
            .map(|d| match self.norm {
                Norm::L1 => d.l1,
                Norm::L2 => d.l2,
                Norm::Sup => d.sup,
            })
            .collect()
    }
}

pub fn convergence_study(
    model: &SmoothedModel,
    n_schedule: &[u64],
    norm: Norm,
    grid: &GridSpec,
) -> Result<ConvergenceReport> {
    if n_schedule.is_empty() || n_schedule.windows(2).any(|w| w[1] <= w[0]) || n_schedule[0] == 0 {
        return Err(invalid("n schedule must be non-empty, positive and strictly increasing"));
    }
    let n_max = *n_schedule.last().unwrap();
    let max_step = 0.2 / (n_max as f64).sqrt();
    for a in &grid.axes {
        if a.count > 1 && a.step() > max_step + 1e-15 {
            return Err(invalid(format!(
                "grid step {} exceeds 0.2/√n_max = {max_step}; oscillations would alias",
                a.step()
            )));
        }
    }
    let densities = n_schedule
        .par_iter()
        .map(|&n| density(model, n, grid))
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<Distances> = densities
        .iter()
        .map(|gd| Distances {
            l1: distance_to_gaussian(gd, Norm::L1).value,
            l2: distance_to_gaussian(gd, Norm::L2).value,
            sup: distance_to_gaussian(gd, Norm::Sup).value,
        })
        .collect();
    let est_tail_error = densities.iter().map(|g| g.meta.est_tail_error).fold(0.0, f64::max);
    let lattice_condition_holds = check_pi_lattice_zeros(&model.source, 20).max_abs <= 1e-12;
    let mut report = ConvergenceReport {
        n_schedule: n_schedule.to_vec(),
        distances,
        norm,
        fitted_log_slope: None,
        even_slope: None,
        odd_slope: None,
        lattice_condition_holds,
        axes: grid.axes.clone(),
        est_tail_error,
    };
    let sel = report.selected();
    let fit = |parity: Option<u64>| {
        let pts: Vec<(f64, f64)> = n_schedule
            .iter()
            .zip(&sel)
            .filter(|(n, d)| parity.is_none_or(|p| *n % 2 == p) && **d > 0.0)
            .map(|(&n, &d)| ((n as f64).ln(), d.ln()))
            .collect();
        least_squares_slope(&pts)
    };
    report.even_slope = fit(Some(0));
    report.odd_slope = fit(Some(1));
    let mixed = n_schedule.iter().any(|n| n % 2 == 0) && n_schedule.iter().any(|n| n % 2 == 1);
    if lattice_condition_holds || !mixed {
        report.fitted_log_slope = fit(None);
    }
    Ok(report)
}

/// Why a support radius `T` is admissible for compactly supported source cfs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TRationale {
    /// `T = 1/β₃`.
    Beta3,
    /// `T = π` for symmetric, atomless-at-zero, unit-variance noise other than ±1.
    SymmetricNonBernoulli,
    Unsupported,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibleT {
    pub t_value: Option<f64>,
    pub rationale: TRationale,
}

/// Admissible support radius for one-dimensional noise. Without a preference
/// the larger admissible value is returned: `π` when the noise qualifies,
/// else `1/β₃`.
pub fn admissible_t(noise: &NoiseDistribution, preference: Option<TRationale>) -> AdmissibleT {
    let flags = noise.flags();
    let symmetric_ok =
        flags.symmetric && !flags.atom_at_zero && !flags.is_bernoulli && flags.unit_variance;
    let unsupported = AdmissibleT { t_value: None, rationale: TRationale::Unsupported };
    let via_beta3 = match noise.beta3() {
        Some(b) if b.is_finite() && b > 0.0 => {
            AdmissibleT { t_value: Some(1.0 / b), rationale: TRationale::Beta3 }
        }
        _ => unsupported,
    };
    let via_symmetry = if symmetric_ok {
        AdmissibleT { t_value: Some(PI), rationale: TRationale::SymmetricNonBernoulli }
    } else {
        unsupported
    };
    match preference {
        Some(TRationale::Beta3) => via_beta3,
        Some(TRationale::SymmetricNonBernoulli) => via_symmetry,
        Some(TRationale::Unsupported) => unsupported,
        None if symmetric_ok => via_symmetry,
        None => via_beta3,
    }
}
