//! Counter-based random streams for reproducible parallel Monte Carlo.
//!
//! Every stream is a pure function of `(seed, stream_id, counter)`, so
//! results do not depend on scheduling or worker count: path `i` of an
//! experiment always consumes stream `i` regardless of which thread runs it.
//!
//! The generator applies the splitmix64 finalizer twice to the keyed
//! counter, which passes the usual statistical batteries and is cheap.

use alloc::vec::Vec;

use crate::math;

#[inline(always)]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline(always)]
fn key(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1)))
}

/// A deterministic random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: key(seed, stream),
            counter: 0,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.key.wrapping_add(self.counter.wrapping_mul(0x2545f4914f6cdd1d)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Uniform in (lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller; caches the paired draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * math::sin(phi));
        r * math::cos(phi)
    }

    /// N(0, variance) draw.
    #[inline]
    pub fn normal(&mut self, variance: f64) -> f64 {
        self.standard_normal() * math::sqrt(variance)
    }

    pub fn fill_normal(&mut self, variance: f64, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.normal(variance);
        }
    }
}

/// A scalar Brownian path on a dyadic grid over `[0, horizon]`, refinable in
/// place by midpoint (Brownian-bridge) bisection.
///
/// The path is a pure function of `(seed, stream_id)`: level-0 increments
/// and every bridge midpoint come from per-node counter streams, so refining
/// never perturbs already-materialized values and two consumers that refine
/// to different depths see consistent paths.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    seed: u64,
    stream: u64,
    horizon: f64,
    /// `values[k]` = W(k·horizon/2^level) for k = 0..=2^level.
    values: Vec<f64>,
    level: u32,
}

impl BrownianPath {
    /// Path materialized at `2^level` uniform increments over `[0, horizon]`.
    pub fn new(seed: u64, stream: u64, horizon: f64, level: u32) -> Self {
        let mut rng = CounterRng::new(seed, stream);
        let dt = horizon;
        let mut p = BrownianPath {
            seed,
            stream,
            horizon,
            values: alloc::vec![0.0, rng.normal(dt)],
            level: 0,
        };
        while p.level < level {
            p.refine();
        }
        p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of increments at the current level.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing at the current level.
    pub fn dt(&self) -> f64 {
        self.horizon / self.len() as f64
    }

    /// W at grid index `k` of the current level.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Increment over grid cell `k` of the current level.
    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    /// One bisection pass: doubles the grid, conditioning midpoints on the
    /// existing endpoints.  Midpoint draws are keyed by (level, cell) so the
    /// refinement is deterministic and order-independent.
    pub fn refine(&mut self) {
        let n = self.len();
        let next_level = self.level + 1;
        let half_dt = self.dt() / 2.0;
        let mut out = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            let a = self.values[k];
            let b = self.values[k + 1];
            // stream id folds in the node address; disjoint from level-0 ids
            let node = ((next_level as u64) << 48) ^ (k as u64) ^ self.stream.rotate_left(17);
            let mut rng = CounterRng::new(self.seed ^ 0xb5ad4eceda1ce2a9, node);
            let mid = 0.5 * (a + b) + rng.normal(half_dt / 2.0);
            out.push(a);
            out.push(mid);
        }
        out.push(self.values[n]);
        self.values = out;
        self.level = next_level;
    }

    pub fn refine_to(&mut self, level: u32) {
        while self.level < level {
            self.refine();
        }
    }

    /// Flatten the path to identically zero at its current level — a
    /// deterministic stand-in for noiseless comparisons.  Refining after
    /// this reintroduces bridge noise, so refine first.
    pub fn zero_out(&mut self) {
        for v in self.values.iter_mut() {
            *v = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let mut a = CounterRng::new(7, 0);
        let mut b = CounterRng::new(7, 0);
        let mut c = CounterRng::new(7, 1);
        for _ in 0..100 {
            let x = a.next_u64();
            assert_eq!(x, b.next_u64());
            assert_ne!(x, c.next_u64());
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = CounterRng::new(12345, 9);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let z = rng.standard_normal();
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn bridge_refinement_preserves_coarse_values() {
        let mut p = BrownianPath::new(3, 5, 2.0, 4);
        let coarse: Vec<f64> = (0..=p.len()).map(|k| p.value(k)).collect();
        p.refine();
        p.refine();
        for (k, &v) in coarse.iter().enumerate() {
            assert_eq!(p.value(4 * k), v);
        }
    }

    #[test]
    fn refinement_depth_does_not_depend_on_order() {
        let mut a = BrownianPath::new(11, 2, 1.0, 3);
        let b = BrownianPath::new(11, 2, 1.0, 6);
        a.refine_to(6);
        for k in 0..=a.len() {
            assert_eq!(a.value(k), b.value(k));
        }
    }

    #[test]
    fn increments_scale_like_sqrt_dt() {
        // quadratic variation over [0,1] ≈ 1
        let p = BrownianPath::new(99, 0, 1.0, 12);
        let qv: f64 = (0..p.len()).map(|k| p.increment(k).powi(2)).sum();
        assert!((qv - 1.0).abs() < 0.06, "qv {qv}");
    }
}
