//! Deterministic identity sweeps: the cotangent-sum identity and
//! finite-difference oracles for the drift and the Laplacian ratio of the
//! sine-product potential.

use nradial_core::config::{check_cot_identity, drift, laplacian_ratio, product_f};
use nradial_core::rng::CounterRng;
use nradial_core::AngleConfig;

/// Random nondegenerate configuration by rejection on the minimal gap.
pub fn random_config(rng: &mut CounterRng, n: usize, min_gap: f64) -> AngleConfig {
    loop {
        let mut gaps = Vec::with_capacity(n);
        for _ in 0..n {
            gaps.push(rng.uniform());
        }
        let total: f64 = gaps.iter().sum();
        let mut angles = Vec::with_capacity(n);
        let mut acc = 0.0;
        angles.push(0.0);
        for g in gaps.iter().take(n - 1) {
            acc += g / total * std::f64::consts::PI;
            angles.push(acc);
        }
        if let Ok(cfg) = AngleConfig::new(&angles) {
            if cfg.min_gap() >= min_gap {
                return cfg;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CotReport {
    pub configs_tested: usize,
    pub max_rel_err: f64,
}

/// Cotangent identity over random configurations for each n in the range.
pub fn cot_identity_sweep(per_n: usize, ns: std::ops::RangeInclusive<usize>, seed: u64) -> CotReport {
    let mut rng = CounterRng::new(seed, 0);
    let mut max_rel = 0.0f64;
    let mut tested = 0;
    for n in ns {
        for _ in 0..per_n {
            let cfg = random_config(&mut rng, n, 1e-4);
            let (lhs, rhs) = check_cot_identity(&cfg).expect("nondegenerate");
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            max_rel = max_rel.max((lhs - rhs).abs() / scale);
            tested += 1;
        }
    }
    CotReport {
        configs_tested: tested,
        max_rel_err: max_rel,
    }
}

/// Central difference of `log F_alpha` along coordinate `j`.
pub fn fd_grad_log_f(cfg: &AngleConfig, alpha: f64, j: usize, h: f64) -> f64 {
    let eval = |s: f64| {
        let mut v = cfg.angles().to_vec();
        v[j] += s;
        product_f(&AngleConfig::relaxed(&v).expect("perturbed config"), alpha).ln()
    };
    (eval(h) - eval(-h)) / (2.0 * h)
}

/// 5-point second difference of `F_alpha` along coordinate `j`.
pub fn fd_second_f(cfg: &AngleConfig, alpha: f64, j: usize, h: f64) -> f64 {
    let eval = |s: f64| {
        let mut v = cfg.angles().to_vec();
        v[j] += s;
        product_f(&AngleConfig::relaxed(&v).expect("perturbed config"), alpha)
    };
    (-eval(2.0 * h) + 16.0 * eval(h) - 30.0 * eval(0.0) + 16.0 * eval(-h) - eval(-2.0 * h))
        / (12.0 * h * h)
}

#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    pub configs_tested: usize,
    pub max_grad_rel_err: f64,
    pub max_lap_rel_err: f64,
}

/// Drift and Laplacian ratio vs their finite-difference oracles on random
/// well-separated configurations.
pub fn fd_sweep(n_configs: usize, seed: u64) -> FdReport {
    let mut rng = CounterRng::new(seed, 1);
    let alphas = [0.5, 1.0, 2.0];
    let mut max_grad = 0.0f64;
    let mut max_lap = 0.0f64;
    let mut tested = 0;
    for i in 0..n_configs {
        let n = 2 + i % 5;
        let cfg = random_config(&mut rng, n, 0.1);
        for &alpha in &alphas {
            let d = drift(&cfg, alpha).expect("nondegenerate");
            for j in 0..n {
                let fd = fd_grad_log_f(&cfg, alpha, j, 1e-5);
                max_grad = max_grad.max((d[j] - fd).abs() / fd.abs().max(1.0));
            }
            let lap = laplacian_ratio(&cfg, alpha).expect("nondegenerate");
            let mut fd_lap = 0.0;
            for j in 0..n {
                fd_lap += fd_second_f(&cfg, alpha, j, 1e-3);
            }
            fd_lap /= product_f(&cfg, alpha);
            max_lap = max_lap.max((lap - fd_lap).abs() / fd_lap.abs().max(1.0));
        }
        tested += 1;
    }
    FdReport {
        configs_tested: tested,
        max_grad_rel_err: max_grad,
        max_lap_rel_err: max_lap,
    }
}
