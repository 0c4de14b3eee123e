//! Ordered angle configurations on the circumference-π torus and the exact
//! deterministic formulas built on them: the sine-product potential
//! `F_alpha`, the cosecant interaction sum `psi`, the cotangent drift, the
//! drift-square identity, and the Laplacian ratio of `F_alpha`.
//!
//! A configuration is an ordered tuple `θ¹ < θ² < … < θⁿ < θ¹ + π` stored in
//! its canonical representative with `θ¹ ∈ [0, π)`.  All formulas here are
//! invariant under common rotation `θ ↦ θ + c`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::math;

/// Gaps below this are treated as collisions.
pub const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfigError {
    /// A configuration needs at least one angle.
    Empty,
    /// Strict ordering `θ¹ < … < θⁿ < θ¹ + π` violated.
    NotOrdered,
    /// Two angles coincide (up to `DEGENERATE_GAP`); the interaction terms
    /// diverge and callers must handle the near-collision explicitly.
    Degenerate { min_gap: f64 },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Empty => write!(f, "configuration has no angles"),
            ConfigError::NotOrdered => {
                write!(f, "angles are not strictly ordered within a half-turn")
            }
            ConfigError::Degenerate { min_gap } => {
                write!(f, "degenerate configuration: min gap {min_gap:.3e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

/// An ordered point of the configuration space: `n` angles with
/// `θ¹ < θ² < … < θⁿ < θ¹ + π`, canonicalized so `θ¹ ∈ [0, π)`.
///
/// `n = 1` is allowed (a single marked point, used by the one-slit Loewner
/// flow); all interaction sums are then empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleConfig {
    angles: Vec<f64>,
}

fn reduce_mod_pi(x: f64) -> f64 {
    let y = x - PI * math::floor(x / PI);
    // floor rounding can land exactly on π
    if y >= PI {
        y - PI
    } else {
        y
    }
}

impl AngleConfig {
    /// Strict constructor: input must already be strictly ordered with span
    /// less than π.  The whole tuple is translated by a multiple of π so the
    /// first angle lies in `[0, π)`.
    pub fn new(angles: &[f64]) -> Result<Self, ConfigError> {
        if angles.is_empty() {
            return Err(ConfigError::Empty);
        }
        let first = angles[0];
        let last = angles[angles.len() - 1];
        if !(last - first < PI) {
            return Err(ConfigError::NotOrdered);
        }
        for w in angles.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ConfigError::NotOrdered);
            }
        }
        let shift = PI * math::floor(first / PI);
        let mut v: Vec<f64> = angles.iter().map(|&x| x - shift).collect();
        // guard against rounding pushing θ¹ to exactly π
        if v[0] >= PI {
            for x in v.iter_mut() {
                *x -= PI;
            }
        }
        Ok(AngleConfig { angles: v })
    }

    /// Relaxed constructor: reduces each angle mod π and sorts.  Ties are
    /// accepted; the resulting configuration is degenerate and only total
    /// operations (`product_f`) are defined on it.
    pub fn relaxed(angles: &[f64]) -> Result<Self, ConfigError> {
        if angles.is_empty() {
            return Err(ConfigError::Empty);
        }
        let mut v: Vec<f64> = angles.iter().map(|&x| reduce_mod_pi(x)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("angles must be finite"));
        Ok(AngleConfig { angles: v })
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Minimal cyclic gap, including the wrap-around gap `θ¹ + π − θⁿ`.
    /// Defined as π for `n = 1`.
    pub fn min_gap(&self) -> f64 {
        let n = self.angles.len();
        if n == 1 {
            return PI;
        }
        let mut g = self.angles[0] + PI - self.angles[n - 1];
        for w in self.angles.windows(2) {
            let d = w[1] - w[0];
            if d < g {
                g = d;
            }
        }
        g
    }

    pub fn is_degenerate(&self) -> bool {
        self.min_gap() < DEGENERATE_GAP
    }

    /// Rotate all angles by `c` and re-canonicalize.  Gaps are preserved.
    pub fn rotated(&self, c: f64) -> Self {
        let mut v: Vec<f64> = self.angles.iter().map(|&x| reduce_mod_pi(x + c)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("angles must be finite"));
        AngleConfig { angles: v }
    }

    /// The boundary points `z^j = exp(2iθ^j)` as (re, im) pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.angles
            .iter()
            .map(|&t| (math::cos(2.0 * t), math::sin(2.0 * t)))
            .collect()
    }

    /// Equally spaced configuration `θ^j = j·π/n`; the drift fixed point.
    pub fn equally_spaced(n: usize) -> Self {
        let v: Vec<f64> = (0..n).map(|j| j as f64 * PI / n as f64).collect();
        AngleConfig { angles: v }
    }

    fn check_nondegenerate(&self) -> Result<(), ConfigError> {
        let g = self.min_gap();
        if g < DEGENERATE_GAP {
            Err(ConfigError::Degenerate { min_gap: g })
        } else {
            Ok(())
        }
    }
}

/// Model parameters `(n, α)` with the derived exponents used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64) -> Self {
        ModelParams { n, alpha }
    }

    /// Parameters for the SLE case `α = a = 2/κ`.
    pub fn from_kappa(n: usize, kappa: f64) -> Self {
        ModelParams {
            n,
            alpha: 2.0 / kappa,
        }
    }

    /// `b_α = (3α − 1)/2`.
    pub fn b_alpha(&self) -> f64 {
        (3.0 * self.alpha - 1.0) / 2.0
    }

    /// `β = α(n² − 1)/4`.
    pub fn beta(&self) -> f64 {
        self.alpha * ((self.n * self.n) as f64 - 1.0) / 4.0
    }

    /// Interpreting `α = a = 2/κ`: the boundary exponent `b = (3a − 1)/2`.
    pub fn b(&self) -> f64 {
        self.b_alpha()
    }

    /// `b̃ = b(1 − a)/(2a)` (equivalently `b(κ − 2)/4`).
    pub fn b_tilde(&self) -> f64 {
        self.b() * (1.0 - self.alpha) / (2.0 * self.alpha)
    }

    /// The interior scaling exponent `β̂ₙ = β − b̃(n − 1)` for `α = a`.
    pub fn beta_hat(&self) -> f64 {
        self.beta() - self.b_tilde() * (self.n as f64 - 1.0)
    }

    /// Decay rate `2αnβ` of the interaction Feynman–Kac functional.
    pub fn decay_rate(&self) -> f64 {
        2.0 * self.alpha * self.n as f64 * self.beta()
    }
}

/// `F_α(θ) = ∏_{j<k} |sin(θ^k − θ^j)|^α`.
///
/// Total on every configuration: returns 0 for degenerate input with
/// `α > 0`, and 1 when `α = 0`.
pub fn product_f(cfg: &AngleConfig, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let th = cfg.angles();
    let mut log_sum = 0.0;
    for j in 0..th.len() {
        for k in (j + 1)..th.len() {
            let s = math::abs(math::sin(th[k] - th[j]));
            if s == 0.0 {
                return 0.0;
            }
            log_sum += math::ln(s);
        }
    }
    math::exp(alpha * log_sum)
}

/// `ψ(θ) = 2 Σ_{j<k} csc²(θ^j − θ^k) ≥ n(n²−1)/3`.
pub fn psi(cfg: &AngleConfig) -> Result<f64, ConfigError> {
    cfg.check_nondegenerate()?;
    let th = cfg.angles();
    let mut sum = 0.0;
    for j in 0..th.len() {
        for k in (j + 1)..th.len() {
            sum += math::csc2(th[k] - th[j]);
        }
    }
    Ok(2.0 * sum)
}

/// Lower bound `n(n²−1)/3` attained exactly at equal spacing.
pub fn psi_lower_bound(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf * nf - 1.0) / 3.0
}

/// Drift vector: component `j` is `α Σ_{k≠j} cot(θ^j − θ^k)`.
/// Components sum to zero by antisymmetry of cot.
pub fn drift(cfg: &AngleConfig, alpha: f64) -> Result<Vec<f64>, ConfigError> {
    cfg.check_nondegenerate()?;
    let th = cfg.angles();
    let n = th.len();
    let mut out = alloc::vec![0.0; n];
    for j in 0..n {
        for k in (j + 1)..n {
            let c = math::cot(th[j] - th[k]);
            out[j] += c;
            out[k] -= c;
        }
    }
    for x in out.iter_mut() {
        *x *= alpha;
    }
    Ok(out)
}

/// Both sides of the drift-square identity
/// `Σ_j (Σ_{k≠j} cot(θ^j − θ^k))² = ψ(θ) − n(n²−1)/3`,
/// evaluated independently.
pub fn check_cot_identity(cfg: &AngleConfig) -> Result<(f64, f64), ConfigError> {
    let d = drift(cfg, 1.0)?;
    let lhs: f64 = d.iter().map(|x| x * x).sum();
    let rhs = psi(cfg)? - psi_lower_bound(cfg.n());
    Ok((lhs, rhs))
}

/// The ratio `ΔF_α/F_α = −α²n(n²−1)/3 + (α²−α)ψ(θ)`.
pub fn laplacian_ratio(cfg: &AngleConfig, alpha: f64) -> Result<f64, ConfigError> {
    let p = psi(cfg)?;
    let nf = cfg.n() as f64;
    Ok(-alpha * alpha * nf * (nf * nf - 1.0) / 3.0 + (alpha * alpha - alpha) * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRAC_PI_2: f64 = PI / 2.0;
    const FRAC_PI_3: f64 = PI / 3.0;
    const FRAC_PI_4: f64 = PI / 4.0;

    fn cfg(angles: &[f64]) -> AngleConfig {
        AngleConfig::new(angles).unwrap()
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let c = AngleConfig::relaxed(&[2.9, 0.4, 1.7]).unwrap();
        let again = AngleConfig::relaxed(c.angles()).unwrap();
        assert_eq!(c, again);
        assert!(c.angles()[0] >= 0.0 && c.angles()[0] < PI);
    }

    #[test]
    fn strict_constructor_rejects_disorder() {
        assert_eq!(
            AngleConfig::new(&[1.0, 0.5]).unwrap_err(),
            ConfigError::NotOrdered
        );
        assert_eq!(
            AngleConfig::new(&[0.0, 3.2]).unwrap_err(),
            ConfigError::NotOrdered
        );
        assert_eq!(AngleConfig::new(&[]).unwrap_err(), ConfigError::Empty);
    }

    #[test]
    fn rotation_preserves_gaps() {
        let c = cfg(&[0.1, 0.9, 2.0]);
        let g = c.min_gap();
        for i in 0..100 {
            let r = c.rotated(0.077 * i as f64);
            assert!((r.min_gap() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn product_f_examples() {
        assert!((product_f(&cfg(&[0.0, FRAC_PI_2]), 2.0) - 1.0).abs() < 1e-15);
        let f = product_f(&cfg(&[0.0, FRAC_PI_3, 2.0 * FRAC_PI_3]), 1.0);
        assert!((f - 3.0 * 3.0f64.sqrt() / 8.0).abs() < 1e-15);
        assert_eq!(product_f(&cfg(&[0.0, FRAC_PI_2]), 0.0), 1.0);
        // degenerate input through the relaxed constructor
        let d = AngleConfig::relaxed(&[0.3, 0.3]).unwrap();
        assert_eq!(product_f(&d, 1.0), 0.0);
        assert_eq!(product_f(&d, 0.0), 1.0);
    }

    #[test]
    fn psi_examples() {
        assert!((psi(&cfg(&[0.0, FRAC_PI_2])).unwrap() - 2.0).abs() < 1e-14);
        assert!((psi(&cfg(&[0.0, FRAC_PI_4])).unwrap() - 4.0).abs() < 1e-14);
        let p = psi(&cfg(&[0.0, FRAC_PI_3, 2.0 * FRAC_PI_3])).unwrap();
        assert!((p - 8.0).abs() < 1e-13);
        assert!((p - psi_lower_bound(3)).abs() < 1e-13);
    }

    #[test]
    fn psi_rejects_degenerate() {
        let d = AngleConfig::relaxed(&[0.3, 0.3 + 1e-14]).unwrap();
        assert!(matches!(psi(&d), Err(ConfigError::Degenerate { .. })));
        assert!(matches!(drift(&d, 1.0), Err(ConfigError::Degenerate { .. })));
    }

    #[test]
    fn drift_examples() {
        let d = drift(&AngleConfig::equally_spaced(3), 1.7).unwrap();
        for x in &d {
            assert!(x.abs() < 1e-13);
        }
        let d = drift(&cfg(&[0.0, FRAC_PI_4]), 1.0).unwrap();
        assert!((d[0] + 1.0).abs() < 1e-14);
        assert!((d[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cot_identity_examples() {
        let (l, r) = check_cot_identity(&cfg(&[0.0, FRAC_PI_2])).unwrap();
        assert!(l.abs() < 1e-13 && r.abs() < 1e-12);
        let (l, r) = check_cot_identity(&cfg(&[0.0, FRAC_PI_3, 2.0 * FRAC_PI_3])).unwrap();
        assert!(l.abs() < 1e-12 && r.abs() < 1e-12);
    }

    #[test]
    fn laplacian_ratio_examples() {
        let c = cfg(&[0.0, 0.8, 1.9]);
        assert!((laplacian_ratio(&c, 1.0).unwrap() + 8.0).abs() < 1e-12);
        assert_eq!(laplacian_ratio(&c, 0.0).unwrap(), 0.0);
        let v = laplacian_ratio(&cfg(&[0.0, FRAC_PI_2]), 2.0).unwrap();
        assert!((v + 4.0).abs() < 1e-12);
    }

    #[test]
    fn params_derived_quantities() {
        // κ = 2: a = 1, b = 1, b̃ = 0
        let p = ModelParams::from_kappa(2, 2.0);
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.b(), 1.0);
        assert_eq!(p.b_tilde(), 0.0);
        assert!((p.beta() - 0.75).abs() < 1e-15);
        assert_eq!(p.beta_hat(), p.beta());
        // n=2, α=1/2: β = 3/8, slope 2αnβ = 3/4
        let q = ModelParams::new(2, 0.5);
        assert!((q.beta() - 0.375).abs() < 1e-15);
        assert!((q.decay_rate() - 0.75).abs() < 1e-15);
        assert!((q.b_alpha() - 0.25).abs() < 1e-15);
    }
}
