//! Special functions and quadrature rules shared by the numerical modules.

use num_complex::Complex64;
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Riemann zeta at an integer argument `s >= 2`.
pub fn zeta_int(s: u32) -> f64 {
    assert!(s >= 2, "zeta_int needs s >= 2");
    let s_f = s as f64;
    if s > 60 {
        return 1.0 + 2f64.powi(-(s as i32)) + 3f64.powi(-(s as i32));
    }
    // Euler-Maclaurin with the head summed directly.
    const N: usize = 40;
    let n = N as f64;
    let head: f64 = (1..N).rev().map(|k| (k as f64).powf(-s_f)).sum();
    let t0 = n.powf(1.0 - s_f) / (s_f - 1.0);
    let t1 = 0.5 * n.powf(-s_f);
    let t2 = s_f / 12.0 * n.powf(-s_f - 1.0);
    let t3 = -s_f * (s_f + 1.0) * (s_f + 2.0) / 720.0 * n.powf(-s_f - 3.0);
    let t4 = s_f * (s_f + 1.0) * (s_f + 2.0) * (s_f + 3.0) * (s_f + 4.0) / 30240.0
        * n.powf(-s_f - 5.0);
    head + t0 + t1 + t2 + t3 + t4
}

/// Taylor coefficients `B_m / m!` of `z / (e^z - 1)` for `m < count`.
pub fn bernoulli_over_factorial(count: usize) -> Vec<f64> {
    (0..count)
        .map(|m| match m {
            0 => 1.0,
            1 => -0.5,
            m if m % 2 == 1 => 0.0,
            m => {
                let sign = if (m / 2) % 2 == 1 { 1.0 } else { -1.0 };
                sign * 2.0 * zeta_int(m as u32) / (2.0 * PI).powi(m as i32)
            }
        })
        .collect()
}

/// Generalized exponential integral `E_p(z) = ∫_1^∞ e^{-zt} t^{-p} dt` for
/// integer `p >= 1` and `Re z >= 0`, `z != 0` (or `p >= 2`).
pub fn expint(p: u32, z: Complex64) -> Complex64 {
    assert!(p >= 1);
    if z.norm() == 0.0 {
        assert!(p >= 2, "E_1(0) diverges");
        return Complex64::new(1.0 / (p as f64 - 1.0), 0.0);
    }
    if z.norm() < 1.0 {
        expint_series(p, z)
    } else {
        expint_continued_fraction(p, z)
    }
}

fn expint_series(p: u32, z: Complex64) -> Complex64 {
    let nm1 = (p - 1) as i64;
    let psi = -EULER_GAMMA + (1..p).map(|k| 1.0 / k as f64).sum::<f64>();
    let mut lead = Complex64::new(1.0, 0.0);
    for k in 1..=nm1 {
        lead *= -z / k as f64;
    }
    let lead = lead * (-z.ln() + psi);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..200i64 {
        if k > 0 {
            term *= -z / k as f64;
        }
        if k == nm1 {
            continue;
        }
        let contrib = term / (k - nm1) as f64;
        sum += contrib;
        if k > nm1 + 2 && contrib.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    lead - sum
}

fn expint_continued_fraction(p: u32, z: Complex64) -> Complex64 {
    // Modified Lentz evaluation of the continued fraction for E_p.
    let tiny = 1e-300;
    let mut b = z + p as f64;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..20_000u32 {
        let an = -(i as f64) * ((p - 1) as f64 + i as f64);
        b += 2.0;
        d = 1.0 / (d * an + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Numerically stable `ln Σ exp(v)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for (i, &x) in GK15_NODES[..7].iter().enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += GK15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
/// Returns the estimate and an error estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
        let (v, e) = gk15(f, a, b);
        if e <= tol || depth == 0 || (b - a).abs() < 1e-12 {
            return (v, e);
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = rec(f, a, m, 0.5 * tol, depth - 1);
        let (v2, e2) = rec(f, m, b, 0.5 * tol, depth - 1);
        (v1 + v2, e1 + e2)
    }
    rec(&f, a, b, tol, 40)
}

/// Adaptive quadrature over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> (f64, f64) {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - t;
        let x = a + t / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Least-squares slope of `y` against `x`; `None` for fewer than two points.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
