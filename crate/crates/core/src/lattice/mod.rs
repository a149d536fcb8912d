//! Lattice sums of densities and characteristic functions, the `πZ^d`
//! vanishing condition, Poisson summation, wrapped autocorrelation and the
//! regularity-integral diagnostics.

pub mod twisted;

use crate::distributions::{Decay, Family, SourceDistribution};
use crate::error::{invalid, unsupported, Result};
use crate::special::{gauss_legendre, integrate};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use twisted::{RawSum, TwistedSummer};

/// A truncated lattice sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeSum {
    #[serde(serialize_with = "serialize_complex")]
    pub value: Complex64,
    /// Largest `|k|` (sup norm) summed directly.
    pub truncation_index: usize,
    /// Estimated magnitude of the omitted or asymptotically summed part.
    pub tail_estimate: f64,
    pub terms_used: usize,
}

fn serialize_complex<S: serde::Serializer>(v: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &v.re)?;
    st.serialize_field("im", &v.im)?;
    st.end()
}

impl LatticeSum {
    pub fn real(&self) -> f64 {
        self.value.re
    }

    fn from_raw(raw: RawSum) -> Self {
        Self {
            value: raw.value,
            truncation_index: raw.truncation_index,
            tail_estimate: raw.tail_estimate,
            terms_used: raw.terms_used,
        }
    }

    /// Combine separable one-dimensional sums into their product.
    fn product(parts: &[LatticeSum]) -> Self {
        let value = parts.iter().map(|p| p.value).product();
        let mut tail = 0.0;
        for (i, p) in parts.iter().enumerate() {
            let others: f64 = parts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| q.value.norm() + q.tail_estimate)
                .product();
            tail += p.tail_estimate * others;
        }
        Self {
            value,
            truncation_index: parts.iter().map(|p| p.truncation_index).max().unwrap_or(0),
            tail_estimate: tail,
            terms_used: parts.iter().map(|p| p.terms_used).product(),
        }
    }
}

fn real_fn<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> Complex64 {
    move |t| Complex64::new(f(t), 0.0)
}

/// `Σ_k e^{2πi z k} g(s k + u)` for a one-dimensional function with decay model `decay`.
pub(crate) fn sum_1d<G: Fn(f64) -> Complex64>(
    g: G,
    decay: &Decay,
    s: f64,
    u: f64,
    z_turns: f64,
    tol: f64,
) -> Result<LatticeSum> {
    if !(s.is_finite() && s > 0.0) {
        return Err(invalid(format!("lattice step must be positive, got {s}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let summer = TwistedSummer::new(decay, s, z_turns, tol);
    Ok(LatticeSum::from_raw(summer.sum(g, u)?))
}

/// Same as [`sum_cf_lattice`] in one dimension, with an explicit direct window
/// `|k| <= window` before the asymptotic tails take over.
pub fn sum_cf_lattice_window(
    dist: &SourceDistribution,
    step: f64,
    phase: f64,
    window: usize,
    tol: f64,
) -> Result<LatticeSum> {
    let fam = dist.family()?;
    let decay = fam.cf_decay();
    let summer = TwistedSummer::new(&decay, step, phase / (2.0 * PI), tol);
    Ok(LatticeSum::from_raw(summer.sum_with_window(real_fn(|t| fam.cf(t)), 0.0, window)?))
}

/// `Σ_{m∈Z^d} p(L m + a)`.
pub fn sum_density_lattice(
    dist: &SourceDistribution,
    scale: f64,
    offset: &[f64],
    tol: f64,
) -> Result<LatticeSum> {
    if offset.len() != dist.dim() {
        return Err(invalid("offset dimension does not match the distribution"));
    }
    let parts = dist
        .components()
        .iter()
        .zip(offset)
        .map(|(fam, &a)| sum_1d(real_fn(|x| fam.density(x)), &fam.density_decay(), scale, a, 0.0, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeSum::product(&parts))
}

/// `Σ_{k∈Z^d} e^{i⟨phase, k⟩} f(s k)`.
pub fn sum_cf_lattice(
    dist: &SourceDistribution,
    step: f64,
    phase: Option<&[f64]>,
    tol: f64,
) -> Result<LatticeSum> {
    let zeros = vec![0.0; dist.dim()];
    let phase = phase.unwrap_or(&zeros);
    if phase.len() != dist.dim() {
        return Err(invalid("phase dimension does not match the distribution"));
    }
    let parts = dist
        .components()
        .iter()
        .zip(phase)
        .map(|(fam, &ph)| {
            sum_1d(real_fn(|t| fam.cf(t)), &fam.cf_decay(), step, 0.0, ph / (2.0 * PI), tol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeSum::product(&parts))
}

/// Largest `|f(πk)|` over `1 <= ‖k‖_∞ <= K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroCheck {
    pub max_abs: f64,
    pub argmax_k: Vec<i64>,
}

pub fn check_pi_lattice_zeros(dist: &SourceDistribution, k_max: usize) -> ZeroCheck {
    let d = dist.dim();
    // Visit 0, 1, -1, 2, -2, ... per axis so ties resolve to positive indices.
    let order: Vec<i64> = std::iter::once(0)
        .chain((1..=k_max as i64).flat_map(|k| [k, -k]))
        .collect();
    let mut best = ZeroCheck { max_abs: 0.0, argmax_k: vec![0; d] };
    let mut first = true;
    let mut idx = vec![0usize; d];
    loop {
        let k: Vec<i64> = idx.iter().map(|&i| order[i]).collect();
        if k.iter().any(|&v| v != 0) {
            let t: Vec<f64> = k.iter().map(|&v| PI * v as f64).collect();
            let v = dist.cf(&t).norm();
            if first || v > best.max_abs {
                best = ZeroCheck { max_abs: v, argmax_k: k };
                first = false;
            }
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return best;
            }
            idx[axis] += 1;
            if idx[axis] < order.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Both sides of `Σ_m p(m) = Σ_k f(2πk)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoissonCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub lhs_tail: f64,
    pub rhs_tail: f64,
}

pub fn poisson_check(dist: &SourceDistribution, tol: f64) -> Result<PoissonCheck> {
    let flags = dist.flags();
    let prefix = "hypotheses of the Poisson summation formula not satisfied";
    if !flags.continuous_density {
        return Err(unsupported(format!("{prefix}: density discontinuous")));
    }
    if dist.abs_moment1().is_none() {
        return Err(unsupported(format!("{prefix}: infinite first absolute moment")));
    }
    if !flags.integrable_cf {
        return Err(unsupported(format!("{prefix}: characteristic function not integrable")));
    }
    let lhs = sum_density_lattice(dist, 1.0, &vec![0.0; dist.dim()], tol)?;
    let rhs = sum_cf_lattice(dist, 2.0 * PI, None, tol)?;
    Ok(PoissonCheck {
        lhs: lhs.real(),
        rhs: rhs.real(),
        gap: (lhs.real() - rhs.real()).abs(),
        lhs_tail: lhs.tail_estimate,
        rhs_tail: rhs.tail_estimate,
    })
}

/// `Σ_{k∈Z^d} ∫ p(2k + x) p(x) dx`, which equals `2^{-d}` exactly when
/// `f` vanishes on `πZ^d \ {0}`.
pub fn wrapped_autocorrelation(dist: &SourceDistribution, tol: f64) -> Result<f64> {
    let parts = dist
        .components()
        .iter()
        .map(|fam| {
            sum_1d(
                real_fn(|y| fam.autocorrelation(y)),
                &fam.autocorrelation_decay(),
                2.0,
                0.0,
                0.0,
                tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeSum::product(&parts).real())
}

/// Euclidean distance from `t` to the lattice `sZ^d`.
pub fn distance_to_lattice(t: &[f64], lattice_step: f64) -> f64 {
    t.iter()
        .map(|&x| {
            let r = x - lattice_step * (x / lattice_step).round();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Which integrability condition to probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityKind {
    /// `∫ |f||∇f| / ‖t‖^{d-1} dt`
    CfTimesGradient,
    /// `∫ |∇f| / ‖t‖^{d-1} dt`
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityEstimate {
    pub estimate: f64,
    pub diverging: bool,
    /// Contribution of each shell `‖k‖_∞ = j` of cells `πk + [-π/2, π/2]^d`.
    pub shell_contributions: Vec<f64>,
    pub fitted_shell_slope: Option<f64>,
}

/// Integrand `|f|^a |∇f| / ‖t‖^{d-1}` over `‖t‖_∞ <= π(K + 1/2)`, with
/// `‖t‖` the distance to `πZ^d`. The estimate is flagged as diverging when
/// the shell contributions decay no faster than `j^{-1.1}`.
pub fn regularity_integral(
    dist: &SourceDistribution,
    kind: RegularityKind,
    window_k: usize,
) -> Result<RegularityEstimate> {
    if window_k < 4 {
        return Err(invalid("regularity window must be at least 4 shells"));
    }
    let integrand = |t: &[f64]| -> f64 {
        let grad = dist.cf_grad(t).expect("catalog laws provide cf gradients");
        let g = grad.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        match kind {
            RegularityKind::CfTimesGradient => dist.cf(t).norm() * g,
            RegularityKind::Gradient => g,
        }
    };
    let shells = match dist.dim() {
        1 => shells_1d(&integrand, dist.components()[0].clone(), window_k),
        2 => shells_2d(&integrand, window_k),
        d => return Err(unsupported(format!("regularity integral not available in dimension {d}"))),
    };
    let estimate = shells.iter().sum();
    let lo = window_k.div_ceil(2).max(1);
    let pts: Vec<(f64, f64)> = (lo..=window_k)
        .filter(|&j| shells[j] > 0.0)
        .map(|j| ((j as f64).ln(), shells[j].ln()))
        .collect();
    let slope = crate::special::least_squares_slope(&pts);
    let diverging = slope.is_some_and(|s| s > -1.1);
    Ok(RegularityEstimate { estimate, diverging, shell_contributions: shells, fitted_shell_slope: slope })
}

fn shells_1d<F: Fn(&[f64]) -> f64>(integrand: &F, fam: Family, k: usize) -> Vec<f64> {
    let support = fam.cf_support_radius();
    let cell = |c: i64| -> f64 {
        let a = PI * (c as f64 - 0.5);
        let b = PI * (c as f64 + 0.5);
        let mut cuts = vec![a];
        let mut kinks = vec![0.0];
        if let Some(r) = support {
            kinks.extend([-r, r]);
        }
        for x in kinks {
            if x > a && x < b {
                cuts.push(x);
            }
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2).map(|w| integrate(|t| integrand(&[t]), w[0], w[1], 1e-13).0).sum()
    };
    (0..=k as i64)
        .map(|j| if j == 0 { cell(0) } else { cell(j) + cell(-j) })
        .collect()
}

fn shells_2d<F: Fn(&[f64]) -> f64>(integrand: &F, k: usize) -> Vec<f64> {
    // Polar coordinates around each lattice point: the Jacobian r cancels
    // the 1/‖t‖ singularity. Each square cell is split into 8 triangles.
    let (gx, gw) = gauss_legendre(24);
    let half = PI / 2.0;
    let cell = |c: [i64; 2]| -> f64 {
        let center = [PI * c[0] as f64, PI * c[1] as f64];
        let mut total = 0.0;
        for tri in 0..8 {
            let phi0 = tri as f64 * PI / 4.0;
            for (xa, wa) in gx.iter().zip(&gw) {
                let phi = phi0 + PI / 8.0 * (xa + 1.0);
                let (sn, cs) = phi.sin_cos();
                let rmax = half / cs.abs().max(sn.abs());
                let mut radial = 0.0;
                for (xr, wr) in gx.iter().zip(&gw) {
                    let r = 0.5 * rmax * (xr + 1.0);
                    radial += wr * integrand(&[center[0] + r * cs, center[1] + r * sn]);
                }
                total += wa * PI / 8.0 * 0.5 * rmax * radial;
            }
        }
        total
    };
    (0..=k as i64)
        .map(|j| {
            if j == 0 {
                return cell([0, 0]);
            }
            let mut s = 0.0;
            for a in -j..=j {
                for b in -j..=j {
                    if a.abs().max(b.abs()) == j {
                        s += cell([a, b]);
                    }
                }
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn density_lattice_examples() {
        let l = make_laplace(1.0).unwrap();
        let e2 = 2f64.exp();
        let v = sum_density_lattice(&l, 2.0, &[0.0], 1e-14).unwrap();
        assert_abs_diff_eq!(v.real(), 0.5 * (e2 + 1.0) / (e2 - 1.0), epsilon = 1e-14);
        let g = make_gaussian(1.0).unwrap();
        let v = sum_density_lattice(&g, 1.0, &[0.0], 1e-15).unwrap();
        // Σ φ(m) = 1 + 2 Σ e^{-2π²k²}
        assert_abs_diff_eq!(v.real(), 1.0 + 2.0 * (-2.0 * PI * PI).exp(), epsilon = 1e-14);
        let u = make_uniform(1.0).unwrap();
        let v = sum_density_lattice(&u, 2.0, &[0.5], 1e-14).unwrap();
        assert_eq!(v.real(), 0.5);
        assert_eq!(v.tail_estimate, 0.0);
    }

    #[test]
    fn cf_lattice_examples() {
        let u = make_uniform(1.0).unwrap();
        let v = sum_cf_lattice(&u, PI, None, 1e-14).unwrap();
        assert_abs_diff_eq!(v.real(), 1.0, epsilon = 1e-14);
        let g = make_gaussian(1.0).unwrap();
        let v = sum_cf_lattice(&g, 2.0 * PI, None, 1e-16).unwrap();
        assert_abs_diff_eq!(v.real(), 1.0 + 2.0 * (-2.0 * PI * PI).exp(), epsilon = 1e-15);
        let f = make_fejer(1.0).unwrap();
        assert_eq!(sum_cf_lattice(&f, 2.0 * PI, None, 1e-14).unwrap().real(), 1.0);
    }

    #[test]
    fn laplace_cf_lattice_matches_closed_form() {
        // Σ_k 1/(1+π²k²) = coth(1), Σ_k (-1)^k/(1+π²k²) = 1/sinh(1)
        let l = make_laplace(1.0).unwrap();
        let v = sum_cf_lattice(&l, PI, None, 1e-14).unwrap();
        assert_abs_diff_eq!(v.real(), 1.0 / 1f64.tanh(), epsilon = 1e-14);
        let v = sum_cf_lattice(&l, PI, Some(&[PI]), 1e-14).unwrap();
        assert_abs_diff_eq!(v.real(), 1.0 / 1f64.sinh(), epsilon = 1e-14);
        assert!(v.value.im.abs() < 1e-14);
    }

    #[test]
    fn window_growth_is_stable() {
        let l = make_laplace(1.0).unwrap();
        let a = sum_cf_lattice_window(&l, PI, 0.7, 20, 1e-14).unwrap();
        let b = sum_cf_lattice_window(&l, PI, 0.7, 30, 1e-14).unwrap();
        assert!((a.value - b.value).norm() <= 2.0 * a.tail_estimate.max(1e-15));
    }

    #[test]
    fn zero_check_examples() {
        let u = make_uniform(1.0).unwrap();
        assert!(check_pi_lattice_zeros(&u, 20).max_abs <= 1e-15);
        let l = make_laplace(1.0).unwrap();
        let z = check_pi_lattice_zeros(&l, 20);
        assert_abs_diff_eq!(z.max_abs, 1.0 / (1.0 + PI * PI), epsilon = 1e-15);
        assert_eq!(z.argmax_k, vec![1]);
        let uu = product(&[u.clone(), u]).unwrap();
        assert!(check_pi_lattice_zeros(&uu, 5).max_abs <= 1e-15);
    }

    #[test]
    fn poisson_examples() {
        let g = make_gaussian(1.0).unwrap();
        assert!(poisson_check(&g, 1e-15).unwrap().gap <= 1e-10);
        let l = make_laplace(1.0).unwrap();
        let p = poisson_check(&l, 1e-15).unwrap();
        let e = 1f64.exp();
        assert_abs_diff_eq!(p.lhs, 0.5 * (e + 1.0) / (e - 1.0), epsilon = 1e-14);
        assert!(p.gap <= 1e-8);
        let u = make_uniform(1.0).unwrap();
        match poisson_check(&u, 1e-12) {
            Err(crate::Error::Unsupported(m)) => assert!(m.contains("density discontinuous")),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(matches!(poisson_check(&make_fejer(1.0).unwrap(), 1e-12), Err(crate::Error::Unsupported(_))));
    }

    #[test]
    fn autocorrelation_examples() {
        let u = make_uniform(1.0).unwrap();
        assert_eq!(wrapped_autocorrelation(&u, 1e-14).unwrap(), 0.5);
        let l = make_laplace(1.0).unwrap();
        let e2 = (-2f64).exp();
        // 1/4 + 2 Σ_{k>=1} (1/4)(1+2k) e^{-2k}
        let s1 = e2 / (1.0 - e2);
        let s2 = e2 / (1.0 - e2).powi(2);
        let exact = 0.25 + 0.5 * (s1 + 2.0 * s2);
        assert_abs_diff_eq!(wrapped_autocorrelation(&l, 1e-15).unwrap(), exact, epsilon = 1e-14);
        let f = make_fejer(1.0).unwrap();
        // f(πk) = 0 for k != 0 when T = 1 < π
        assert_abs_diff_eq!(wrapped_autocorrelation(&f, 1e-14).unwrap(), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_lattice(&[PI, 0.0], PI), 0.0);
        assert_abs_diff_eq!(distance_to_lattice(&[PI / 2.0], PI), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            distance_to_lattice(&[PI / 2.0 - 1e-12, PI / 2.0 - 1e-12], PI),
            PI / 2f64.sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn regularity_examples() {
        let u = make_uniform(1.0).unwrap();
        let r = regularity_integral(&u, RegularityKind::CfTimesGradient, 16).unwrap();
        assert!(!r.diverging && r.estimate.is_finite());
        let l = make_laplace(1.0).unwrap();
        let r = regularity_integral(&l, RegularityKind::Gradient, 16).unwrap();
        // ∫ |f'| = 2 f(0) = 2 for a unimodal cf
        assert!(!r.diverging);
        assert_abs_diff_eq!(r.estimate, 2.0, epsilon = 1e-3);
        let uu = product(&[u.clone(), u]).unwrap();
        let r = regularity_integral(&uu, RegularityKind::Gradient, 12).unwrap();
        assert!(r.diverging, "{:?}", r.fitted_shell_slope);
    }
}
