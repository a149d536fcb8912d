//! The oscillation factor `A_n(x)` in `p_n(x) = A_n(x) φ(x) + O(log n/√n)`,
//! computed from the characteristic function and from the density, plus the
//! parity-split limits of `p_n(0)`.

use crate::distributions::{Family, SourceDistribution};
use crate::error::{invalid, Error, Result};
use crate::inversion::GridSpec;
use crate::lattice::{sum_cf_lattice_window, sum_density_lattice};
use crate::smoothing::{density, std_normal_density, SmoothedModel};
use crate::special::least_squares_slope;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const IMAG_LIMIT: f64 = 1e-9;
const SUM_TOL: f64 = 1e-14;
const PERIOD_PROBES: usize = 25;

fn one_dim(model: &SmoothedModel) -> Result<&Family> {
    if !model.noise.is_bernoulli() {
        return Err(invalid("the oscillation factor is defined for Bernoulli noise"));
    }
    model.source.family()
}

/// `Σ_k e^{-iπk(x√n + n)} f(πk)`; `window` fixes the directly summed range.
pub fn oscillation_factor_cf(model: &SmoothedModel, n: u64, x: f64, window: Option<usize>) -> Result<f64> {
    one_dim(model)?;
    let a = x * (n as f64).sqrt() + n as f64;
    // Only the phase modulo 2π matters; reduce before scaling to keep digits.
    let phase = -PI * (a - 2.0 * (a / 2.0).round());
    let sum = sum_cf_lattice_window(&model.source, PI, phase, window.unwrap_or(0), SUM_TOL)?;
    if sum.value.im.abs() > IMAG_LIMIT {
        return Err(Error::InconsistentCf(format!(
            "oscillation factor has imaginary part {:e}",
            sum.value.im
        )));
    }
    Ok(sum.value.re)
}

/// `2 Σ_m p(2m + x√n + n)`.
pub fn oscillation_factor_density(model: &SmoothedModel, n: u64, x: f64, tol: f64) -> Result<f64> {
    one_dim(model)?;
    let a = x * (n as f64).sqrt() + n as f64;
    let a = a - 2.0 * (a / 2.0).round();
    Ok(2.0 * sum_density_lattice(&model.source, 2.0, &[a], tol)?.real())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillationReport {
    pub n: u64,
    pub xs: Vec<f64>,
    pub p_n: Vec<f64>,
    pub a_values: Vec<f64>,
    /// `sup_x |p_n(x) - A_n(x) φ(x)|` over the grid.
    pub residual_sup: f64,
    /// Largest `|A_n(x + 2/√n) - A_n(x)|` over the probe points.
    pub period_defect: f64,
    /// Largest gap between the two formulas for `A_n` over the grid.
    pub method_gap: f64,
    pub est_tail_error: f64,
}

impl OscillationReport {
    pub fn residuals(&self) -> Vec<f64> {
        self.xs
            .iter()
            .zip(&self.p_n)
            .zip(&self.a_values)
            .map(|((&x, &p), &a)| p - a * std_normal_density(&[x]))
            .collect()
    }
}

pub fn oscillation_report(
    model: &SmoothedModel,
    n: u64,
    grid: &GridSpec,
    window: Option<usize>,
) -> Result<OscillationReport> {
    one_dim(model)?;
    if grid.dim() != 1 {
        return Err(invalid("oscillation reports need a one-dimensional grid"));
    }
    let gd = density(model, n, grid)?;
    let xs = grid.axes[0].points();
    let pairs = xs
        .par_iter()
        .map(|&x| {
            Ok((
                oscillation_factor_cf(model, n, x, window)?,
                oscillation_factor_density(model, n, x, SUM_TOL)?,
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let a_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let method_gap = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual_sup = xs
        .iter()
        .zip(&gd.values)
        .zip(&a_values)
        .map(|((&x, &p), &a)| (p - a * std_normal_density(&[x])).abs())
        .fold(0.0, f64::max);
    let period = 2.0 / (n as f64).sqrt();
    let (lo, hi) = (grid.axes[0].min, (grid.axes[0].max - period).max(grid.axes[0].min));
    let period_defect = (0..PERIOD_PROBES)
        .into_par_iter()
        .map(|j| {
            let x = lo + (hi - lo) * j as f64 / (PERIOD_PROBES - 1) as f64;
            Ok((oscillation_factor_cf(model, n, x + period, window)?
                - oscillation_factor_cf(model, n, x, window)?)
                .abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(OscillationReport {
        n,
        xs,
        p_n: gd.values,
        a_values,
        residual_sup,
        period_defect,
        method_gap,
        est_tail_error: gd.meta.est_tail_error,
    })
}

/// Least-squares slope of `log residual_sup` against `log n`.
pub fn residual_slope(reports: &[OscillationReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.residual_sup > 0.0)
        .map(|r| ((r.n as f64).ln(), r.residual_sup.ln()))
        .collect();
    least_squares_slope(&pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityLimits {
    pub even_limit: f64,
    pub odd_limit: f64,
    /// `"density"` or `"cf"`.
    pub method: &'static str,
}

/// Limits of `p_{2n}(0)` and `p_{2n+1}(0)`: `(2/√(2π)) Σ_m p(2m + a)` with
/// `a = 0` and `a = 1`.
pub fn even_odd_limits(source: &SourceDistribution) -> Result<ParityLimits> {
    let fam = source.family()?;
    let scale = 1.0 / (2.0 * PI).sqrt();
    if fam.flags().continuous_density {
        let even = sum_density_lattice(source, 2.0, &[0.0], SUM_TOL)?.real();
        let odd = sum_density_lattice(source, 2.0, &[1.0], SUM_TOL)?.real();
        return Ok(ParityLimits { even_limit: 2.0 * scale * even, odd_limit: 2.0 * scale * odd, method: "density" });
    }
    // Σ_m p(2m + a) = ½ Σ_k e^{iπka} f(πk) avoids evaluating p at jumps.
    let even = sum_cf_lattice_window(source, PI, 0.0, 0, SUM_TOL)?.real();
    let odd = sum_cf_lattice_window(source, PI, PI, 0, SUM_TOL)?.real();
    Ok(ParityLimits { even_limit: scale * even, odd_limit: scale * odd, method: "cf" })
}
