//! Euler–Maruyama integration of the circular interacting SDE
//!
//! `dθ^j = α Σ_{k≠j} cot(θ^j − θ^k) dt + dW^j`
//!
//! with recursive Brownian-bridge substepping near collisions and trapezoid
//! accumulation of `∫ψ` on the substepped grid.
//!
//! The drift repels coordinates from each other; the danger with a plain
//! Euler step is overshooting through a small gap.  A proposed update is
//! accepted when ordering survives and the minimal gap either stays above
//! `gap_floor` or shrinks by at most half; otherwise the step is bisected,
//! splitting the Gaussian increment as a Brownian bridge, down to
//! `max_substep_depth` before the move is rejected outright.

use alloc::vec::Vec;

use crate::config::{drift, psi, AngleConfig, ConfigError, DEGENERATE_GAP};
use crate::math;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Base time step.
    pub dt: f64,
    /// Gap threshold that triggers substepping.
    pub gap_floor: f64,
    /// Maximal bisection depth before a move is rejected.
    pub max_substep_depth: u32,
    /// Master seed; per-path streams are derived from (seed, path index).
    pub seed: u64,
    /// Number of Monte-Carlo paths for estimators that average.
    pub n_paths: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: 1e-3,
            gap_floor: 0.02,
            max_substep_depth: 20,
            seed: 0,
            n_paths: 1,
        }
    }
}

/// Counters reported by the stepper.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepDiagnostics {
    pub base_steps: u64,
    pub substeps: u64,
    pub rejections: u64,
}

/// Outcome of one base step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub cfg: AngleConfig,
    /// Trapezoid contribution to `∫ψ` over this step's substepped grid.
    pub psi_increment: f64,
    pub rejections: u64,
}

/// One Euler–Maruyama base step with caller-supplied Gaussian increments
/// (variance `dt` per coordinate).  `rng` supplies bridge midpoints when the
/// step needs bisection.
pub fn step_dyson(
    cfg: &AngleConfig,
    alpha: f64,
    dt: f64,
    noise: &[f64],
    opts: &SimOptions,
    rng: &mut CounterRng,
) -> Result<StepOutcome, ConfigError> {
    assert_eq!(noise.len(), cfg.n());
    let psi_pre = psi(cfg)?;
    let mut acc = 0.0;
    let mut rejections = 0;
    let next = substep(
        cfg, psi_pre, alpha, dt, noise, 0, opts, rng, &mut acc, &mut rejections,
    )?
    .0;
    Ok(StepOutcome {
        cfg: next,
        psi_increment: acc,
        rejections,
    })
}

type Sub = (AngleConfig, f64);

#[allow(clippy::too_many_arguments)]
fn substep(
    cfg: &AngleConfig,
    psi_pre: f64,
    alpha: f64,
    dt: f64,
    noise: &[f64],
    depth: u32,
    opts: &SimOptions,
    rng: &mut CounterRng,
    acc: &mut f64,
    rejections: &mut u64,
) -> Result<Sub, ConfigError> {
    let d = drift(cfg, alpha)?;
    let th = cfg.angles();
    let proposal: Vec<f64> = (0..th.len())
        .map(|j| th[j] + d[j] * dt + noise[j])
        .collect();
    let old_gap = cfg.min_gap();
    if let Ok(next) = AngleConfig::new(&proposal) {
        let g = next.min_gap();
        if g >= DEGENERATE_GAP && (g >= opts.gap_floor || g >= 0.5 * old_gap) {
            let psi_post = psi(&next)?;
            *acc += 0.5 * (psi_pre + psi_post) * dt;
            return Ok((next, psi_post));
        }
    }
    if depth >= opts.max_substep_depth {
        // move rejected: hold the configuration, advance time flat
        *rejections += 1;
        *acc += psi_pre * dt;
        return Ok((cfg.clone(), psi_pre));
    }
    // Brownian-bridge bisection of the increment
    let half = dt / 2.0;
    let mut w1 = alloc::vec![0.0; noise.len()];
    let mut w2 = alloc::vec![0.0; noise.len()];
    for j in 0..noise.len() {
        let mid = 0.5 * noise[j] + rng.normal(half / 2.0);
        w1[j] = mid;
        w2[j] = noise[j] - mid;
    }
    let (c1, p1) = substep(
        cfg, psi_pre, alpha, half, &w1, depth + 1, opts, rng, acc, rejections,
    )?;
    substep(
        &c1,
        p1,
        alpha,
        half,
        &w2,
        depth + 1,
        opts,
        rng,
        acc,
        rejections,
    )
}

/// Streaming simulator: one path of the SDE, stepping on the base grid and
/// carrying the running `∫ψ`.  Deterministic given `(opts.seed, stream)`.
#[derive(Debug, Clone)]
pub struct DysonSim {
    cfg: AngleConfig,
    alpha: f64,
    opts: SimOptions,
    rng: CounterRng,
    t: f64,
    steps: u64,
    int_psi: f64,
    diag: StepDiagnostics,
    noise_buf: Vec<f64>,
}

impl DysonSim {
    pub fn new(cfg0: AngleConfig, alpha: f64, opts: SimOptions, stream: u64) -> Result<Self, ConfigError> {
        psi(&cfg0)?; // reject degenerate starts up front
        let n = cfg0.n();
        Ok(DysonSim {
            cfg: cfg0,
            alpha,
            opts,
            rng: CounterRng::new(opts.seed, stream),
            t: 0.0,
            steps: 0,
            int_psi: 0.0,
            diag: StepDiagnostics::default(),
            noise_buf: alloc::vec![0.0; n],
        })
    }

    pub fn cfg(&self) -> &AngleConfig {
        &self.cfg
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn int_psi(&self) -> f64 {
        self.int_psi
    }

    pub fn diagnostics(&self) -> StepDiagnostics {
        self.diag
    }

    /// One base step.
    pub fn step(&mut self) -> Result<(), ConfigError> {
        let dt = self.opts.dt;
        let mut noise = core::mem::take(&mut self.noise_buf);
        self.rng.fill_normal(dt, &mut noise);
        let out = step_dyson(&self.cfg, self.alpha, dt, &noise, &self.opts, &mut self.rng)?;
        self.noise_buf = noise;
        self.cfg = out.cfg;
        self.int_psi += out.psi_increment;
        self.diag.rejections += out.rejections;
        self.diag.base_steps += 1;
        self.steps += 1;
        self.t = self.steps as f64 * dt;
        Ok(())
    }

    /// Run `k` base steps.
    pub fn run_steps(&mut self, k: u64) -> Result<(), ConfigError> {
        for _ in 0..k {
            self.step()?;
        }
        Ok(())
    }

    /// Advance to (at least) time `t`, in whole base steps.
    pub fn advance_to(&mut self, t: f64) -> Result<(), ConfigError> {
        while self.t < t - 1e-12 {
            self.step()?;
        }
        Ok(())
    }
}

/// A recorded trajectory on the base grid with the running `∫ψ` functional.
#[derive(Debug, Clone)]
pub struct SdePath {
    pub times: Vec<f64>,
    pub configs: Vec<AngleConfig>,
    pub alpha: f64,
    /// `int_psi[i]` = trapezoid `∫₀^{times[i]} ψ(θ_s) ds` on the substepped grid.
    pub int_psi: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

impl SdePath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_config(&self) -> &AngleConfig {
        self.configs.last().expect("path has at least the initial entry")
    }
}

/// Simulate one path to `t_end`, recording every base step.  `stream`
/// selects the per-path random stream; identical `(opts.seed, stream)`
/// reproduce the path bitwise.
pub fn simulate_stream(
    cfg0: &AngleConfig,
    alpha: f64,
    t_end: f64,
    opts: &SimOptions,
    stream: u64,
) -> Result<SdePath, ConfigError> {
    let n_steps = math::floor(t_end / opts.dt + 0.5) as u64;
    let mut sim = DysonSim::new(cfg0.clone(), alpha, *opts, stream)?;
    let mut times = Vec::with_capacity(n_steps as usize + 1);
    let mut configs = Vec::with_capacity(n_steps as usize + 1);
    let mut int_psi = Vec::with_capacity(n_steps as usize + 1);
    times.push(0.0);
    configs.push(cfg0.clone());
    int_psi.push(0.0);
    for _ in 0..n_steps {
        sim.step()?;
        times.push(sim.t());
        configs.push(sim.cfg().clone());
        int_psi.push(sim.int_psi());
    }
    Ok(SdePath {
        times,
        configs,
        alpha,
        int_psi,
        diagnostics: sim.diagnostics(),
    })
}

/// As [`simulate_stream`] with stream 0.
pub fn simulate(
    cfg0: &AngleConfig,
    alpha: f64,
    t_end: f64,
    opts: &SimOptions,
) -> Result<SdePath, ConfigError> {
    simulate_stream(cfg0, alpha, t_end, opts, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn zero_rng() -> CounterRng {
        CounterRng::new(0, 0)
    }

    #[test]
    fn equal_spacing_is_a_fixed_point() {
        let cfg = AngleConfig::equally_spaced(4);
        let noise = [0.0; 4];
        let out = step_dyson(&cfg, 1.3, 0.01, &noise, &SimOptions::default(), &mut zero_rng())
            .unwrap();
        for (a, b) in out.cfg.angles().iter().zip(cfg.angles()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn half_turn_pair_is_stationary() {
        let cfg = AngleConfig::new(&[0.3, 0.3 + PI / 2.0]).unwrap();
        let out = step_dyson(&cfg, 1.0, 0.01, &[0.0, 0.0], &SimOptions::default(), &mut zero_rng())
            .unwrap();
        for (a, b) in out.cfg.angles().iter().zip(cfg.angles()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_gap_growth() {
        // gap π/4, α = 1: dZ = 2 cot(π/4) dt = 2 dt
        let cfg = AngleConfig::new(&[0.0, PI / 4.0]).unwrap();
        let dt = 1e-3;
        let out = step_dyson(&cfg, 1.0, dt, &[0.0, 0.0], &SimOptions::default(), &mut zero_rng())
            .unwrap();
        let gap = out.cfg.angles()[1] - out.cfg.angles()[0];
        assert!((gap - (PI / 4.0 + 2.0 * dt)).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_path() {
        let cfg = AngleConfig::equally_spaced(3);
        let p = simulate(&cfg, 1.0, 0.0, &SimOptions::default()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.int_psi[0], 0.0);
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let cfg = AngleConfig::equally_spaced(3);
        let opts = SimOptions {
            seed: 42,
            ..SimOptions::default()
        };
        let a = simulate_stream(&cfg, 1.0, 0.5, &opts, 11).unwrap();
        let b = simulate_stream(&cfg, 1.0, 0.5, &opts, 11).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.int_psi, b.int_psi);
        for (x, y) in a.configs.iter().zip(&b.configs) {
            assert_eq!(x.angles(), y.angles());
        }
        let c = simulate_stream(&cfg, 1.0, 0.5, &opts, 12).unwrap();
        assert_ne!(a.configs.last().unwrap().angles(), c.configs.last().unwrap().angles());
    }

    #[test]
    fn psi_accumulator_is_nondecreasing_and_positive() {
        let cfg = AngleConfig::equally_spaced(2);
        let opts = SimOptions {
            seed: 9,
            ..SimOptions::default()
        };
        let p = simulate(&cfg, 0.5, 1.0, &opts).unwrap();
        for w in p.int_psi.windows(2) {
            assert!(w[1] > w[0]);
        }
        // ψ ≥ n(n²−1)/3 = 2 for n = 2, so ∫₀^1 ψ ≥ 2
        assert!(*p.int_psi.last().unwrap() >= 2.0);
    }

    #[test]
    fn ordering_survives_noisy_evolution() {
        let cfg = AngleConfig::equally_spaced(3);
        let opts = SimOptions {
            seed: 77,
            ..SimOptions::default()
        };
        let p = simulate(&cfg, 0.5, 2.0, &opts).unwrap();
        for c in &p.configs {
            assert!(c.min_gap() > 0.0);
        }
        assert_eq!(p.diagnostics.rejections, 0);
    }

    #[test]
    fn degenerate_start_is_refused() {
        let cfg = AngleConfig::relaxed(&[0.1, 0.1]).unwrap();
        assert!(simulate(&cfg, 1.0, 1.0, &SimOptions::default()).is_err());
    }
}
