//! Catalog of source and noise distributions with exact density and
//! characteristic-function pairs.

use crate::error::{invalid, unsupported, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

const SERIES_CUTOFF: f64 = 1e-4;

/// One oscillatory component `e^{i freq t} Σ coef · t^{-power}` of an
/// asymptotic expansion valid for `|t|` beyond some radius.
#[derive(Clone, Debug, PartialEq)]
pub struct OscTerm {
    pub freq: f64,
    pub powers: Vec<(Complex64, u32)>,
}

/// Decay model of a one-dimensional function sampled on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub enum Decay {
    /// Vanishes for `|t| > radius`.
    Compact { radius: f64 },
    /// `|g(t)| <= scale · e^{-rate |t|}`.
    Exponential { scale: f64, rate: f64 },
    /// `|g(t)| <= scale · e^{-t² / (2 var)}`.
    Gaussian { scale: f64, var: f64 },
    /// `g(t) = Σ_c e^{i ω_c t} Σ_p coef · t^{-p}` for `|t| >= valid_from`,
    /// exact to double precision there.
    Algebraic { valid_from: f64, terms: Vec<OscTerm> },
}

/// Structural flags of a distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Flags {
    pub symmetric_about_0: bool,
    pub bounded_variation_density: bool,
    pub cf_nonnegative: bool,
    pub continuous_density: bool,
    pub integrable_cf: bool,
}

/// A one-dimensional catalog law.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Uniform { h: f64 },
    Laplace { b: f64 },
    Gaussian { sigma: f64 },
    Fejer { t: f64 },
}

fn sinc(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

fn sinc_d1(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        let u2 = u * u;
        -u / 3.0 + u * u2 / 30.0 - u * u2 * u2 / 840.0
    } else {
        (u * u.cos() - u.sin()) / (u * u)
    }
}

fn sinc_d2(u: f64) -> f64 {
    if u.abs() < SERIES_CUTOFF {
        let u2 = u * u;
        -1.0 / 3.0 + u2 / 10.0 - u2 * u2 / 168.0
    } else {
        ((2.0 - u * u) * u.sin() - 2.0 * u * u.cos()) / (u * u * u)
    }
}

impl Family {
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Family::Uniform { h } => {
                let a = x.abs();
                if a < h {
                    0.5 / h
                } else if a == h {
                    0.25 / h
                } else {
                    0.0
                }
            }
            Family::Laplace { b } => (-x.abs() / b).exp() / (2.0 * b),
            Family::Gaussian { sigma } => {
                (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Family::Fejer { t } => {
                let u = t * x;
                if u.abs() < SERIES_CUTOFF {
                    let u2 = u * u;
                    t / PI * (0.5 - u2 / 24.0 + u2 * u2 / 720.0)
                } else {
                    let s = (0.5 * u).sin();
                    2.0 * s * s / (PI * t * x * x)
                }
            }
        }
    }

    /// Characteristic function; every catalog entry is symmetric, so it is real.
    pub fn cf(&self, t: f64) -> f64 {
        match *self {
            Family::Uniform { h } => sinc(h * t),
            Family::Laplace { b } => 1.0 / (1.0 + b * b * t * t),
            Family::Gaussian { sigma } => (-0.5 * sigma * sigma * t * t).exp(),
            Family::Fejer { t: radius } => (1.0 - t.abs() / radius).max(0.0),
        }
    }

    pub fn cf_deriv(&self, t: f64) -> f64 {
        match *self {
            Family::Uniform { h } => h * sinc_d1(h * t),
            Family::Laplace { b } => {
                let q = 1.0 + b * b * t * t;
                -2.0 * b * b * t / (q * q)
            }
            Family::Gaussian { sigma } => -sigma * sigma * t * self.cf(t),
            Family::Fejer { t: radius } => {
                if t == 0.0 || t.abs() >= radius {
                    0.0
                } else {
                    -t.signum() / radius
                }
            }
        }
    }

    pub fn cf_second(&self, t: f64) -> Option<f64> {
        match *self {
            Family::Uniform { h } => Some(h * h * sinc_d2(h * t)),
            Family::Laplace { b } => {
                let q = 1.0 + b * b * t * t;
                Some((6.0 * b.powi(4) * t * t - 2.0 * b * b) / (q * q * q))
            }
            Family::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                Some((s2 * s2 * t * t - s2) * self.cf(t))
            }
            Family::Fejer { .. } => None,
        }
    }

    /// `E|X|`; `None` when infinite.
    pub fn abs_moment1(&self) -> Option<f64> {
        match *self {
            Family::Uniform { h } => Some(h / 2.0),
            Family::Laplace { b } => Some(b),
            Family::Gaussian { sigma } => Some(sigma * (2.0 / PI).sqrt()),
            Family::Fejer { .. } => None,
        }
    }

    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            Family::Uniform { h } => Some(h * h / 3.0),
            Family::Laplace { b } => Some(2.0 * b * b),
            Family::Gaussian { sigma } => Some(sigma * sigma),
            Family::Fejer { .. } => None,
        }
    }

    pub fn third_abs_moment(&self) -> Option<f64> {
        match *self {
            Family::Uniform { h } => Some(h.powi(3) / 4.0),
            Family::Laplace { b } => Some(6.0 * b.powi(3)),
            Family::Gaussian { sigma } => Some(2.0 * 2f64.sqrt() * sigma.powi(3) / PI.sqrt()),
            Family::Fejer { .. } => None,
        }
    }

    pub fn cf_support_radius(&self) -> Option<f64> {
        match *self {
            Family::Fejer { t } => Some(t),
            _ => None,
        }
    }

    pub fn flags(&self) -> Flags {
        Flags {
            symmetric_about_0: true,
            bounded_variation_density: true,
            cf_nonnegative: !matches!(self, Family::Uniform { .. }),
            continuous_density: !matches!(self, Family::Uniform { .. }),
            integrable_cf: !matches!(self, Family::Uniform { .. }),
        }
    }

    /// Mass of `X` outside `[-r, r]` is negligible (below about `1e-18`)
    /// for `r` at least this radius; infinite for algebraic tails.
    pub fn density_tail_radius(&self) -> f64 {
        match *self {
            Family::Uniform { h } => h,
            Family::Laplace { b } => 42.0 * b,
            Family::Gaussian { sigma } => 9.5 * sigma,
            Family::Fejer { .. } => f64::INFINITY,
        }
    }

    pub fn cf_decay(&self) -> Decay {
        match *self {
            Family::Uniform { h } => Decay::Algebraic {
                valid_from: 0.0,
                terms: vec![
                    OscTerm { freq: h, powers: vec![(Complex64::new(0.0, -0.5 / h), 1)] },
                    OscTerm { freq: -h, powers: vec![(Complex64::new(0.0, 0.5 / h), 1)] },
                ],
            },
            Family::Laplace { b } => {
                // 1/(1+b²t²) = Σ_j (-1)^j (bt)^{-2j-2}; at |bt| >= 50 eight terms
                // leave a remainder below 1e-30.
                let powers = (0..8u32)
                    .map(|j| {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        (Complex64::new(sign * b.powi(-(2 * j as i32) - 2), 0.0), 2 * j + 2)
                    })
                    .collect();
                Decay::Algebraic { valid_from: 50.0 / b, terms: vec![OscTerm { freq: 0.0, powers }] }
            }
            Family::Gaussian { sigma } => Decay::Gaussian { scale: 1.0, var: 1.0 / (sigma * sigma) },
            Family::Fejer { t } => Decay::Compact { radius: t },
        }
    }

    pub fn density_decay(&self) -> Decay {
        match *self {
            Family::Uniform { h } => Decay::Compact { radius: h },
            Family::Laplace { b } => Decay::Exponential { scale: 0.5 / b, rate: 1.0 / b },
            Family::Gaussian { sigma } => Decay::Gaussian {
                scale: 1.0 / (sigma * (2.0 * PI).sqrt()),
                var: sigma * sigma,
            },
            Family::Fejer { t } => {
                let c = 1.0 / (PI * t);
                Decay::Algebraic {
                    valid_from: 0.0,
                    terms: vec![
                        OscTerm { freq: 0.0, powers: vec![(Complex64::new(c, 0.0), 2)] },
                        OscTerm { freq: t, powers: vec![(Complex64::new(-0.5 * c, 0.0), 2)] },
                        OscTerm { freq: -t, powers: vec![(Complex64::new(-0.5 * c, 0.0), 2)] },
                    ],
                }
            }
        }
    }

    /// Closed form of `r(y) = ∫ p(y + x) p(x) dx`.
    pub fn autocorrelation(&self, y: f64) -> f64 {
        match *self {
            Family::Uniform { h } => (2.0 * h - y.abs()).max(0.0) / (4.0 * h * h),
            Family::Laplace { b } => {
                let r = y.abs() / b;
                (1.0 + r) * (-r).exp() / (4.0 * b)
            }
            Family::Gaussian { sigma } => {
                (-y * y / (4.0 * sigma * sigma)).exp() / (2.0 * sigma * PI.sqrt())
            }
            Family::Fejer { t } => {
                let u = t * y;
                if u.abs() < 1e-2 {
                    let u2 = u * u;
                    2.0 * t / PI
                        * (1.0 / 6.0 - u2 / 120.0 + u2 * u2 / 5040.0 - u2 * u2 * u2 / 362_880.0)
                } else {
                    2.0 / (PI * t * y.powi(3)) * (y - (t * y).sin() / t)
                }
            }
        }
    }

    pub fn autocorrelation_decay(&self) -> Decay {
        match *self {
            Family::Uniform { h } => Decay::Compact { radius: 2.0 * h },
            // (1 + r) e^{-r} <= 2 e^{-r/2}
            Family::Laplace { b } => Decay::Exponential { scale: 0.5 / b, rate: 0.5 / b },
            Family::Gaussian { sigma } => Decay::Gaussian {
                scale: 1.0 / (2.0 * sigma * PI.sqrt()),
                var: 2.0 * sigma * sigma,
            },
            Family::Fejer { t } => Decay::Algebraic {
                valid_from: 0.0,
                terms: vec![
                    OscTerm { freq: 0.0, powers: vec![(Complex64::new(2.0 / (PI * t), 0.0), 2)] },
                    OscTerm { freq: t, powers: vec![(Complex64::new(0.0, 1.0 / (PI * t * t)), 3)] },
                    OscTerm { freq: -t, powers: vec![(Complex64::new(0.0, -1.0 / (PI * t * t)), 3)] },
                ],
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Uniform { h } => rng.random_range(-h..h),
            Family::Laplace { b } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Family::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            Family::Fejer { t } => loop {
                // Rejection from a Cauchy proposal: sinc²(u)(1+u²) <= 2.
                let u = (PI * (rng.random::<f64>() - 0.5)).tan();
                let s = sinc(u);
                if rng.random::<f64>() * 2.0 <= s * s * (1.0 + u * u) {
                    break 2.0 * u / t;
                }
            },
        }
    }

    /// Canonical catalog spec string.
    pub fn spec(&self) -> String {
        match *self {
            Family::Uniform { h } => format!("uniform:h={h}"),
            Family::Laplace { b } => format!("laplace:b={b}"),
            Family::Gaussian { sigma } => format!("gaussian:sigma={sigma}"),
            Family::Fejer { t } => format!("fejer:T={t}"),
        }
    }
}

/// A source law on `R^d`, stored as independent one-dimensional components.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceDistribution {
    components: Vec<Family>,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Uniform law on `[-h, h]`. At `x = ±h` the density takes the midpoint value `1/(4h)`.
pub fn make_uniform(halfwidth: f64) -> Result<SourceDistribution> {
    let h = positive("halfwidth", halfwidth)?;
    Ok(SourceDistribution { components: vec![Family::Uniform { h }] })
}

pub fn make_laplace(scale: f64) -> Result<SourceDistribution> {
    let b = positive("scale", scale)?;
    Ok(SourceDistribution { components: vec![Family::Laplace { b }] })
}

pub fn make_gaussian(sigma: f64) -> Result<SourceDistribution> {
    let sigma = positive("sigma", sigma)?;
    Ok(SourceDistribution { components: vec![Family::Gaussian { sigma }] })
}

/// Law with triangular characteristic function `(1 - |t|/T)⁺`.
pub fn make_fejer(support_radius: f64) -> Result<SourceDistribution> {
    let t = positive("support radius", support_radius)?;
    Ok(SourceDistribution { components: vec![Family::Fejer { t }] })
}

/// Independent product of one-dimensional laws.
pub fn product(components: &[SourceDistribution]) -> Result<SourceDistribution> {
    if components.is_empty() {
        return Err(invalid("product needs at least one component"));
    }
    let mut out = Vec::with_capacity(components.len());
    for c in components {
        if c.dim() != 1 {
            return Err(invalid("product components must be one-dimensional"));
        }
        out.push(c.components[0].clone());
    }
    Ok(SourceDistribution { components: out })
}

impl SourceDistribution {
    pub fn from_components(components: Vec<Family>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("distribution needs at least one component"));
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Family] {
        &self.components
    }

    /// The single component of a one-dimensional law.
    pub fn family(&self) -> Result<&Family> {
        if self.dim() == 1 {
            Ok(&self.components[0])
        } else {
            Err(invalid(format!("expected a one-dimensional law, got dim {}", self.dim())))
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        self.components.iter().zip(x).map(|(c, &xi)| c.density(xi)).product()
    }

    pub fn cf(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim(), "point dimension mismatch");
        Complex64::new(self.components.iter().zip(t).map(|(c, &ti)| c.cf(ti)).product(), 0.0)
    }

    pub fn cf_grad(&self, t: &[f64]) -> Option<Vec<Complex64>> {
        assert_eq!(t.len(), self.dim(), "point dimension mismatch");
        let values: Vec<f64> = self.components.iter().zip(t).map(|(c, &ti)| c.cf(ti)).collect();
        let grad = (0..self.dim())
            .map(|i| {
                let mut g = self.components[i].cf_deriv(t[i]);
                for (j, v) in values.iter().enumerate() {
                    if j != i {
                        g *= v;
                    }
                }
                Complex64::new(g, 0.0)
            })
            .collect();
        Some(grad)
    }

    /// `f''` for one-dimensional laws with a twice differentiable cf.
    pub fn cf_second(&self, t: f64) -> Option<Complex64> {
        if self.dim() != 1 {
            return None;
        }
        self.components[0].cf_second(t).map(|v| Complex64::new(v, 0.0))
    }

    /// `E|X|` (Euclidean norm); `None` when infinite.
    pub fn abs_moment1(&self) -> Option<f64> {
        match self.components.as_slice() {
            [c] => c.abs_moment1(),
            cs => {
                // Finite iff every coordinate has a finite second moment; report
                // the root of the summed second moments as an upper bound.
                let s: Option<f64> = cs.iter().map(|c| c.second_moment()).sum();
                s.map(f64::sqrt)
            }
        }
    }

    pub fn second_moment(&self) -> Option<f64> {
        self.components.iter().map(|c| c.second_moment()).sum()
    }

    /// Sup-norm radius of the cf support, when every factor is compactly supported.
    pub fn cf_support_radius(&self) -> Option<f64> {
        self.components
            .iter()
            .map(|c| c.cf_support_radius())
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn flags(&self) -> Flags {
        self.components.iter().map(|c| c.flags()).fold(
            Flags {
                symmetric_about_0: true,
                bounded_variation_density: true,
                cf_nonnegative: true,
                continuous_density: true,
                integrable_cf: true,
            },
            |a, b| Flags {
                symmetric_about_0: a.symmetric_about_0 && b.symmetric_about_0,
                bounded_variation_density: a.bounded_variation_density
                    && b.bounded_variation_density,
                cf_nonnegative: a.cf_nonnegative && b.cf_nonnegative,
                continuous_density: a.continuous_density && b.continuous_density,
                integrable_cf: a.integrable_cf && b.integrable_cf,
            },
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.components.iter().map(|c| c.sample(rng)).collect()
    }

    pub fn spec(&self) -> String {
        match self.components.as_slice() {
            [c] => c.spec(),
            cs => format!("product:{}", cs.iter().map(Family::spec).collect::<Vec<_>>().join(",")),
        }
    }
}

/// Law of the noise variables `X_1, X_2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseDistribution {
    /// Uniform on the cube `{-1, 1}^d`; characteristic function `cos t_1 ... cos t_d`.
    Bernoulli { dim: usize },
    /// A continuous product law with unit-variance coordinates.
    Continuous(SourceDistribution),
}

pub fn bernoulli_noise(dim: usize) -> Result<NoiseDistribution> {
    if dim == 0 {
        return Err(invalid("noise dimension must be positive"));
    }
    Ok(NoiseDistribution::Bernoulli { dim })
}

/// Wrap a catalog law as noise; every coordinate must be centered with unit variance.
pub fn continuous_noise(law: SourceDistribution) -> Result<NoiseDistribution> {
    for c in law.components() {
        match c.second_moment() {
            Some(v) if (v - 1.0).abs() <= 1e-10 => {}
            Some(v) => {
                return Err(invalid(format!(
                    "noise must have unit variance per coordinate; {} has variance {v}",
                    c.spec()
                )))
            }
            None => {
                return Err(invalid(format!("noise {} has infinite variance", c.spec())));
            }
        }
    }
    Ok(NoiseDistribution::Continuous(law))
}

/// Flags relevant to the choice of an admissible cf support radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseFlags {
    pub symmetric: bool,
    pub atom_at_zero: bool,
    pub is_bernoulli: bool,
    pub unit_variance: bool,
}

impl NoiseDistribution {
    pub fn dim(&self) -> usize {
        match self {
            NoiseDistribution::Bernoulli { dim } => *dim,
            NoiseDistribution::Continuous(law) => law.dim(),
        }
    }

    /// One-dimensional characteristic function of coordinate `axis`.
    pub fn cf_axis(&self, axis: usize, t: f64) -> f64 {
        match self {
            NoiseDistribution::Bernoulli { .. } => t.cos(),
            NoiseDistribution::Continuous(law) => law.components()[axis].cf(t),
        }
    }

    pub fn cf(&self, t: &[f64]) -> Complex64 {
        assert_eq!(t.len(), self.dim(), "point dimension mismatch");
        Complex64::new(t.iter().enumerate().map(|(i, &ti)| self.cf_axis(i, ti)).product(), 0.0)
    }

    pub fn flags(&self) -> NoiseFlags {
        match self {
            NoiseDistribution::Bernoulli { .. } => NoiseFlags {
                symmetric: true,
                atom_at_zero: false,
                is_bernoulli: true,
                unit_variance: true,
            },
            NoiseDistribution::Continuous(law) => NoiseFlags {
                symmetric: law.flags().symmetric_about_0,
                atom_at_zero: false,
                is_bernoulli: false,
                unit_variance: law
                    .components()
                    .iter()
                    .all(|c| c.second_moment().is_some_and(|v| (v - 1.0).abs() <= 1e-10)),
            },
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, NoiseDistribution::Bernoulli { .. })
    }

    /// `E|X_1|³` for one-dimensional noise; `None` if infinite or `d > 1`.
    pub fn beta3(&self) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        match self {
            NoiseDistribution::Bernoulli { .. } => Some(1.0),
            NoiseDistribution::Continuous(law) => law.components()[0].third_abs_moment(),
        }
    }

    pub fn sample_axis<R: Rng + ?Sized>(&self, axis: usize, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::Bernoulli { .. } => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDistribution::Continuous(law) => law.components()[axis].sample(rng),
        }
    }

    pub fn spec(&self) -> String {
        match self {
            NoiseDistribution::Bernoulli { .. } => "bernoulli".to_string(),
            NoiseDistribution::Continuous(law) => law.spec(),
        }
    }
}

/// Third absolute moment `β₃` of one-dimensional noise.
pub fn beta3(noise: &NoiseDistribution) -> Result<f64> {
    if noise.dim() != 1 {
        return Err(invalid("beta3 is defined here for one-dimensional noise only"));
    }
    noise.beta3().ok_or_else(|| unsupported("noise has an infinite third absolute moment"))
}

/// `E|X|³` of a one-dimensional law by adaptive quadrature of its density.
pub fn third_abs_moment_quadrature(family: &Family) -> f64 {
    use crate::special::{integrate, integrate_to_infinity};
    let g = |x: f64| x.powi(3) * family.density(x);
    let v = match *family {
        Family::Uniform { h } => integrate(g, 0.0, h, 1e-14).0,
        _ => integrate_to_infinity(g, 0.0, 1e-14).0,
    };
    2.0 * v
}
