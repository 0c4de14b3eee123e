//! Gauss–Legendre quadrature and the normalization integrals
//! `I_α = ∫ F_α(θ) dθ` over the ordered-angle domain.
//!
//! Since `F_α` depends only on the gaps, the integral factorizes as
//! `I_α = π · ∫_{0<x₂<…<xₙ<π} F_α(0, x₂, …, xₙ) dx`, which is evaluated by
//! tensor-product Gauss–Legendre for `n ≤ 4` and stratified Monte Carlo
//! above that.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::rng::CounterRng;
use crate::stats::{kahan_sum, Estimate};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = math::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' at x by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if math::abs(dx) < 1e-15 {
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

/// Nodes and weights mapped to `(a, b)`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&t| half * t).collect(),
    )
}

/// `∫₀^π sin^α x dx` by 200-node Gauss–Legendre.
pub fn sin_power_integral(alpha: f64) -> f64 {
    let (x, w) = gauss_legendre_on(200, 0.0, PI);
    kahan_sum(
        x.iter()
            .zip(&w)
            .map(|(&x, &w)| w * math::powf(math::sin(x), alpha)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMethod {
    Quadrature,
    MonteCarlo,
}

const QUAD_NODES: usize = 200;

/// `I_α` for the given `n ≥ 2`.
///
/// Quadrature handles `n ≤ 4` (200 nodes per axis); larger `n` falls back
/// to Monte Carlo and says so in the metadata.  The Monte Carlo estimator
/// stratifies on the first simplex coordinate.
pub fn normalization_integral_seeded(
    n: usize,
    alpha: f64,
    method: IntegralMethod,
    mc_samples: usize,
    seed: u64,
) -> Estimate {
    assert!(n >= 2, "normalization integral needs n >= 2");
    assert!(alpha >= 0.0);
    match method {
        IntegralMethod::Quadrature if n <= 4 => quadrature_integral(n, alpha),
        IntegralMethod::Quadrature => {
            let mut e = monte_carlo_integral(n, alpha, mc_samples, seed);
            e.metadata = String::from("monte-carlo (quadrature unsupported for n > 4)");
            e
        }
        IntegralMethod::MonteCarlo => monte_carlo_integral(n, alpha, mc_samples, seed),
    }
}

/// `I_α` with default Monte-Carlo budget (2²⁰ stratified samples, seed 0).
pub fn normalization_integral(n: usize, alpha: f64, method: IntegralMethod) -> Estimate {
    normalization_integral_seeded(n, alpha, method, 1 << 20, 0)
}

fn log_sin_gaps(gaps: &[f64]) -> Option<f64> {
    // gaps are the positions x₂ < … < xₙ of the non-pinned angles; the
    // pinned angle is 0.  Sum of log|sin| over all pairs.
    let mut s = 0.0;
    for (j, &x) in gaps.iter().enumerate() {
        let v = math::sin(x);
        if v <= 0.0 {
            return None;
        }
        s += math::ln(v);
        for &y in gaps.iter().skip(j + 1) {
            let v = math::sin(y - x);
            if v <= 0.0 {
                return None;
            }
            s += math::ln(v);
        }
    }
    Some(s)
}

fn quadrature_integral(n: usize, alpha: f64) -> Estimate {
    let value = match n {
        2 => {
            // exact reduction I_α = π ∫₀^π sin^α x dx
            PI * sin_power_integral(alpha)
        }
        3 => {
            let (ys, wy) = gauss_legendre_on(QUAD_NODES, 0.0, PI);
            let (u, wu) = gauss_legendre(QUAD_NODES);
            let mut total = 0.0;
            for (&y, &wyk) in ys.iter().zip(&wy) {
                // inner x over (0, y)
                let mut inner = 0.0;
                for (&t, &wt) in u.iter().zip(&wu) {
                    let x = 0.5 * y * (t + 1.0);
                    if let Some(ls) = log_sin_gaps(&[x, y]) {
                        inner += 0.5 * y * wt * math::exp(alpha * ls);
                    }
                }
                total += wyk * inner;
            }
            PI * total
        }
        4 => {
            let (zs, wz) = gauss_legendre_on(QUAD_NODES, 0.0, PI);
            let (u, wu) = gauss_legendre(QUAD_NODES);
            let mut total = 0.0;
            for (&z, &wzk) in zs.iter().zip(&wz) {
                let mut mid = 0.0;
                for (&ty, &wty) in u.iter().zip(&wu) {
                    let y = 0.5 * z * (ty + 1.0);
                    let mut inner = 0.0;
                    for (&tx, &wtx) in u.iter().zip(&wu) {
                        let x = 0.5 * y * (tx + 1.0);
                        if let Some(ls) = log_sin_gaps(&[x, y, z]) {
                            inner += 0.5 * y * wtx * math::exp(alpha * ls);
                        }
                    }
                    mid += 0.5 * z * wty * inner;
                }
                total += wzk * mid;
            }
            PI * total
        }
        _ => unreachable!(),
    };
    Estimate::exact(value, "gauss-legendre quadrature, 200 nodes per axis")
}

fn monte_carlo_integral(n: usize, alpha: f64, samples: usize, seed: u64) -> Estimate {
    // Sample (n-1) ordered uniforms on (0, π) by sorting, stratifying the
    // first raw uniform over 16 equal slabs.  The simplex has volume
    // π^{n-1}/(n-1)!, and the θ¹ direction contributes a factor π.
    let strata = 16usize;
    let per = (samples / strata).max(1);
    let mut vals: Vec<f64> = Vec::with_capacity(strata * per);
    let mut rng = CounterRng::new(seed, 0x1ea7_c0de ^ n as u64);
    let mut gaps = alloc::vec![0.0; n - 1];
    for s in 0..strata {
        for _ in 0..per {
            let u0 = (s as f64 + rng.uniform()) / strata as f64;
            gaps[0] = u0 * PI;
            for g in gaps.iter_mut().skip(1) {
                *g = rng.uniform() * PI;
            }
            gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let f = match log_sin_gaps(&gaps) {
                Some(ls) => math::exp(alpha * ls),
                None => 0.0,
            };
            vals.push(f);
        }
    }
    let mut volume = PI; // θ¹ factor
    let mut factorial = 1.0;
    for k in 1..n {
        volume *= PI;
        factorial *= k as f64;
    }
    volume /= factorial;
    let mut e = Estimate::from_samples(&vals, "stratified monte-carlo");
    e.mean *= volume;
    e.std_error *= volume;
    e
}
