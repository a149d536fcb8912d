//! Twisted lattice sums `Σ_k e^{2πi z k} g(s k + u)`.
//!
//! Rapidly decaying summands are summed directly. Summands with algebraic
//! tails are summed directly over a window and the two tails are added in
//! closed form through Lerch-type sums `Σ_{k>=0} e^{iθk} (k + A)^{-p}`,
//! evaluated by an Euler-Maclaurin expansion twisted by `e^{iθk}`.

use crate::distributions::{Decay, OscTerm};
use crate::error::{unsupported, Result};
use crate::special::{bernoulli_over_factorial, expint};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const COEFF_TERMS: usize = 400;
const MAX_ORDER: usize = 40;
const MIN_WINDOW: f64 = 16.0;
const MAX_TERMS: usize = 1_000_000;

fn bernoulli_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| bernoulli_over_factorial(COEFF_TERMS))
}

/// Reduce a twist in turns to `[-1/2, 1/2)`, snapping near-integers to 0.
pub(crate) fn wrap_turns(turns: f64) -> f64 {
    let f = turns - (turns + 0.5).floor();
    if f.abs() < 1e-12 {
        0.0
    } else {
        f
    }
}

/// Coefficients `c_j(θ)` of the twisted Euler-Maclaurin expansion
/// `Σ_{k>=0} e^{iθk} φ(k) = ∫_0^∞ e^{iθx} φ(x) dx + Σ_j c_j(θ) φ^{(j)}(0)`.
#[derive(Clone, Debug)]
pub struct TwistCoefficients {
    theta: f64,
    c: Vec<Complex64>,
}

impl TwistCoefficients {
    pub fn new(theta: f64) -> Self {
        let a = bernoulli_table();
        let it = Complex64::new(0.0, theta);
        let c = (0..=MAX_ORDER)
            .map(|j| {
                if theta == 0.0 {
                    return Complex64::new(-a[j + 1], 0.0);
                }
                let mut binom = 1.0;
                let mut pow = Complex64::new(1.0, 0.0);
                let mut s = Complex64::new(0.0, 0.0);
                for m in (j + 1)..COEFF_TERMS {
                    if m > j + 1 {
                        binom *= (m - 1) as f64 / (m - 1 - j) as f64;
                        pow *= it;
                    }
                    if a[m] != 0.0 {
                        s -= pow * (a[m] * binom);
                    }
                }
                s
            })
            .collect();
        Self { theta, c }
    }

    /// `Σ_{k>=0} e^{iθk} (k + a)^{-p}` for `a` well above 1. At `θ = 0, p = 1`
    /// the divergent integral is replaced by `-ln a`; such values are only
    /// meaningful in differences.
    pub fn lerch_tail(&self, p: u32, a: f64) -> (Complex64, f64) {
        let theta = self.theta;
        let integral = if theta == 0.0 {
            if p == 1 {
                Complex64::new(-a.ln(), 0.0)
            } else {
                Complex64::new(a.powi(1 - p as i32) / (p as f64 - 1.0), 0.0)
            }
        } else {
            let z = Complex64::new(0.0, -theta * a);
            Complex64::from_polar(a.powi(1 - p as i32), -theta * a) * expint(p, z)
        };
        let mut sum = integral;
        let mut poch = 1.0;
        // Odd-order terms nearly vanish for small θ, so the stopping rule
        // tracks the envelope of consecutive pairs.
        let mut prev_mag = 0.0;
        let mut prev_env = f64::INFINITY;
        let mut last = 0.0;
        let inv_a = 1.0 / a;
        let mut apow = a.powi(-(p as i32));
        for (j, cj) in self.c.iter().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let term = cj * (sign * poch * apow);
            let mag = term.norm();
            let env = mag.max(prev_mag);
            if j > 4 && env > prev_env {
                break;
            }
            sum += term;
            last = env;
            if j > 4 && env < 1e-18 * sum.norm() {
                break;
            }
            prev_env = env;
            prev_mag = mag;
            poch *= p as f64 + j as f64;
            apow *= inv_a;
        }
        (sum, last + 1e-16 * sum.norm())
    }
}

/// Result of a one-dimensional twisted lattice sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct RawSum {
    pub value: Complex64,
    pub truncation_index: usize,
    pub tail_estimate: f64,
    pub terms_used: usize,
}

struct PreparedTerm {
    freq: f64,
    powers: Vec<(Complex64, u32)>,
    pos: TwistCoefficients,
    neg: TwistCoefficients,
}

/// Precomputed state for repeated sums with fixed `decay`, `s` and twist `z`.
pub(crate) struct TwistedSummer<'a> {
    decay: &'a Decay,
    s: f64,
    z: f64,
    tol: f64,
    terms: Vec<PreparedTerm>,
}

impl<'a> TwistedSummer<'a> {
    pub(crate) fn new(decay: &'a Decay, s: f64, z_turns: f64, tol: f64) -> Self {
        let z = wrap_turns(z_turns);
        let terms = match decay {
            Decay::Algebraic { terms, .. } => terms.iter().map(|t| prepare(t, s, z)).collect(),
            _ => Vec::new(),
        };
        Self { decay, s, z, tol, terms }
    }

    /// `Σ_k e^{2πi z k} g(s k + u)`.
    pub(crate) fn sum<G: Fn(f64) -> Complex64>(&self, g: G, u: f64) -> Result<RawSum> {
        // Shift u into [-s/2, s/2); the re-indexing multiplies by e^{-2πi z q}.
        let q = (u / self.s).round();
        let u0 = u - q * self.s;
        let phase = if self.z == 0.0 || q == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -2.0 * PI * wrap_turns(self.z * q))
        };
        let raw = match self.decay {
            Decay::Compact { radius } => self.sum_compact(&g, u0, *radius),
            Decay::Exponential { scale, rate } => {
                let bound = |k: usize| {
                    let x0 = self.s * (k as f64 + 0.5);
                    2.0 * scale * (-rate * x0).exp() / (1.0 - (-rate * self.s).exp())
                };
                self.sum_rapid(&g, u0, bound)?
            }
            Decay::Gaussian { scale, var } => {
                let bound = |k: usize| {
                    let x0 = self.s * (k as f64 + 0.5);
                    2.0 * scale * (-x0 * x0 / (2.0 * var)).exp()
                        / (1.0 - (-x0 * self.s / var).exp())
                };
                self.sum_rapid(&g, u0, bound)?
            }
            Decay::Algebraic { valid_from, .. } => {
                let m = ((valid_from + u0.abs()) / self.s).ceil().max(0.0) as usize;
                let m = m.max((MIN_WINDOW + u0.abs() / self.s).ceil() as usize);
                self.sum_algebraic(&g, u0, m)?
            }
        };
        Ok(RawSum { value: raw.value * phase, ..raw })
    }

    /// Same as [`sum`](Self::sum) with an explicit direct window `|k| <= m`
    /// (algebraic decay only; `m` is raised to the validity radius if needed).
    pub(crate) fn sum_with_window<G: Fn(f64) -> Complex64>(
        &self,
        g: G,
        u: f64,
        m: usize,
    ) -> Result<RawSum> {
        match self.decay {
            Decay::Algebraic { valid_from, .. } => {
                let q = (u / self.s).round();
                let u0 = u - q * self.s;
                let phase = Complex64::from_polar(1.0, -2.0 * PI * wrap_turns(self.z * q));
                let lo = ((valid_from + u0.abs()) / self.s)
                    .ceil()
                    .max(MIN_WINDOW + (u0.abs() / self.s).ceil()) as usize;
                let raw = self.sum_algebraic(&g, u0, m.max(lo))?;
                Ok(RawSum { value: raw.value * phase, ..raw })
            }
            _ => self.sum(g, u),
        }
    }

    fn term<G: Fn(f64) -> Complex64>(&self, g: &G, u: f64, k: i64) -> Complex64 {
        let v = g(self.s * k as f64 + u);
        if self.z == 0.0 {
            v
        } else {
            v * Complex64::from_polar(1.0, 2.0 * PI * wrap_turns(self.z * k as f64))
        }
    }

    fn sum_compact<G: Fn(f64) -> Complex64>(&self, g: &G, u: f64, radius: f64) -> RawSum {
        let lo = ((-radius - u) / self.s).ceil() as i64;
        let hi = ((radius - u) / self.s).floor() as i64;
        let mut value = Complex64::new(0.0, 0.0);
        for k in lo..=hi {
            value += self.term(g, u, k);
        }
        let k_max = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        RawSum {
            value,
            truncation_index: k_max,
            tail_estimate: 0.0,
            terms_used: (hi - lo + 1).max(0) as usize,
        }
    }

    fn sum_rapid<G, B>(&self, g: &G, u: f64, bound: B) -> Result<RawSum>
    where
        G: Fn(f64) -> Complex64,
        B: Fn(usize) -> f64,
    {
        let mut k = 8usize;
        while bound(k) > self.tol {
            k *= 2;
            if k > MAX_TERMS {
                return Err(unsupported("lattice sum did not converge within the term cap"));
            }
        }
        let mut value = self.term(g, u, 0);
        for j in 1..=k as i64 {
            value += self.term(g, u, j) + self.term(g, u, -j);
        }
        Ok(RawSum { value, truncation_index: k, tail_estimate: bound(k), terms_used: 2 * k + 1 })
    }

    fn sum_algebraic<G: Fn(f64) -> Complex64>(&self, g: &G, u: f64, m: usize) -> Result<RawSum> {
        if 2 * m + 1 > MAX_TERMS {
            return Err(unsupported("lattice sum window exceeds the term cap"));
        }
        let mut value = self.term(g, u, 0);
        for j in 1..=m as i64 {
            value += self.term(g, u, j) + self.term(g, u, -j);
        }
        let s = self.s;
        let mf = (m + 1) as f64;
        let a_pos = mf + u / s;
        let a_neg = mf - u / s;
        let mut err = 0.0;
        for t in &self.terms {
            let th = t.pos.theta;
            let shift_pos = Complex64::from_polar(1.0, th * mf);
            let shift_neg = Complex64::from_polar(1.0, -th * mf);
            let ph = Complex64::from_polar(1.0, t.freq * u);
            for &(coef, p) in &t.powers {
                let (lp, ep) = t.pos.lerch_tail(p, a_pos);
                let (ln, en) = t.neg.lerch_tail(p, a_neg);
                let sp = s.powi(-(p as i32));
                let sn = (-s).powi(-(p as i32));
                value += ph * coef * (shift_pos * lp * sp + shift_neg * ln * sn);
                err += coef.norm() * (ep * sp + en * sp);
            }
        }
        Ok(RawSum { value, truncation_index: m, tail_estimate: err, terms_used: 2 * m + 1 })
    }
}

fn prepare(term: &OscTerm, s: f64, z: f64) -> PreparedTerm {
    let turns = wrap_turns(z + term.freq * s / (2.0 * PI));
    let theta = 2.0 * PI * turns;
    PreparedTerm {
        freq: term.freq,
        powers: term.powers.clone(),
        pos: TwistCoefficients::new(theta),
        neg: TwistCoefficients::new(-theta),
    }
}
