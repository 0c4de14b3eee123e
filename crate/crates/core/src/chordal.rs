//! Two-path chordal flow in the upper half-plane and its block-discrete
//! approximation.
//!
//! The pair of driving processes solves
//!
//! `dX^j = a/(X^j − X^{3−j}) dt + dB^j`,
//!
//! and the half-plane hull map solves `ġ = a/(g − X¹) + a/(g − X²)`.  The
//! discrete scheme grows, per block of length `h`, two single-pole hulls of
//! half-plane capacity `a·h` each and composes them; driver endpoints are
//! passed through the other path's map, so the recursion for the tracked
//! drivers is `X̂^j(kh+h) = g̃^{3−j}(X̃^j(h))`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::rng::BrownianPath;

/// Gap (X² − X¹) below which a pair path is truncated.
pub const PAIR_GAP_FLOOR: f64 = 1e-3;

/// Euler–Maruyama sample of the interacting pair on the dyadic grid of the
/// supplied Brownian paths (both must share `horizon` and `level`).
#[derive(Debug, Clone)]
pub struct PairPath {
    pub a: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Driver values; `x[j][k]` at `times[k]`.
    pub x: [Vec<f64>; 2],
    /// Brownian increments consumed per step, `db[j][k] = B^j(t_{k+1}) − B^j(t_k)`.
    pub db: [Vec<f64>; 2],
    /// Index of the first time the gap dropped below the floor, if any.
    pub truncated_at: Option<usize>,
}

impl PairPath {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Last index usable for comparisons (stops at truncation).
    pub fn last_index(&self) -> usize {
        self.truncated_at.unwrap_or(self.times.len() - 1)
    }
}

/// Simulate the pair from `(x1, x2)`, `x1 < x2`, through the full horizon of
/// the Brownian paths.
pub fn simulate_pair(x1: f64, x2: f64, a: f64, bm: &(BrownianPath, BrownianPath)) -> PairPath {
    assert!(x1 < x2, "drivers must start ordered");
    assert_eq!(bm.0.len(), bm.1.len());
    let n = bm.0.len();
    let dt = bm.0.dt();
    let mut xs = [Vec::with_capacity(n + 1), Vec::with_capacity(n + 1)];
    let mut dbs = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut x = [x1, x2];
    xs[0].push(x[0]);
    xs[1].push(x[1]);
    let mut times = Vec::with_capacity(n + 1);
    times.push(0.0);
    let mut truncated_at = None;
    for k in 0..n {
        let gap = x[1] - x[0];
        let (d0, d1) = (bm.0.increment(k), bm.1.increment(k));
        dbs[0].push(d0);
        dbs[1].push(d1);
        if truncated_at.is_none() {
            if gap <= PAIR_GAP_FLOOR {
                truncated_at = Some(k);
            } else {
                x[0] += -a / gap * dt + d0;
                x[1] += a / gap * dt + d1;
                if x[1] - x[0] <= PAIR_GAP_FLOOR {
                    truncated_at = Some(k + 1);
                }
            }
        }
        xs[0].push(x[0]);
        xs[1].push(x[1]);
        times.push((k + 1) as f64 * dt);
    }
    PairPath {
        a,
        dt,
        times,
        x: xs,
        db: dbs,
        truncated_at,
    }
}

fn two_pole_rhs(g: Complex64, a: f64, x1: f64, x2: f64) -> Complex64 {
    a / (g - x1) + a / (g - x2)
}

fn rk4_two_pole(g: Complex64, a: f64, x1: f64, x2: f64, dt: f64) -> Complex64 {
    let k1 = two_pole_rhs(g, a, x1, x2);
    let k2 = two_pole_rhs(g + 0.5 * dt * k1, a, x1, x2);
    let k3 = two_pole_rhs(g + 0.5 * dt * k2, a, x1, x2);
    let k4 = two_pole_rhs(g + dt * k3, a, x1, x2);
    g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// State of a point carried by a flow: alive at a position or absorbed into
/// the hull at a time index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Carried {
    Alive(Complex64),
    Absorbed { step: usize },
}

impl Carried {
    pub fn alive(self) -> Option<Complex64> {
        match self {
            Carried::Alive(z) => Some(z),
            Carried::Absorbed { .. } => None,
        }
    }
}

const ABSORB_IMAG: f64 = 1e-7;

/// Continuous two-pole flow of `z` along the pair path; `values[k]` is
/// `g_{t_k}(z)`.  Drivers are frozen at the per-step midpoint; RK4 per step.
pub fn continuous_flow(pair: &PairPath, z: Complex64) -> Vec<Carried> {
    let last = pair.last_index();
    let mut out = Vec::with_capacity(last + 1);
    let mut state = Carried::Alive(z);
    out.push(state);
    for k in 0..last {
        if let Carried::Alive(g) = state {
            let x1 = 0.5 * (pair.x[0][k] + pair.x[0][k + 1]);
            let x2 = 0.5 * (pair.x[1][k] + pair.x[1][k + 1]);
            let near = (g - x1).norm().min((g - x2).norm());
            if g.im < ABSORB_IMAG || near < 10.0 * crate::math::sqrt(pair.dt) * 1e-2 && g.im < 1e-3 {
                state = Carried::Absorbed { step: k };
            } else {
                // two half-steps for a little extra accuracy near the poles
                let mid = rk4_two_pole(g, pair.a, x1, x2, pair.dt / 2.0);
                let next = rk4_two_pole(mid, pair.a, x1, x2, pair.dt / 2.0);
                state = if next.im < ABSORB_IMAG {
                    Carried::Absorbed { step: k }
                } else {
                    Carried::Alive(next)
                };
            }
        }
        out.push(state);
    }
    out
}

fn one_pole_rk4_c(g: Complex64, a: f64, x: f64, dt: f64) -> Complex64 {
    let f = |w: Complex64| a / (w - x);
    let k1 = f(g);
    let k2 = f(g + 0.5 * dt * k1);
    let k3 = f(g + 0.5 * dt * k2);
    let k4 = f(g + dt * k3);
    g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn one_pole_rk4_r(g: f64, a: f64, x: f64, dt: f64) -> f64 {
    let f = |w: f64| a / (w - x);
    let k1 = f(g);
    let k2 = f(g + 0.5 * dt * k1);
    let k3 = f(g + 0.5 * dt * k2);
    let k4 = f(g + dt * k3);
    g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Output of the block-discrete scheme.
#[derive(Debug, Clone)]
pub struct DiscreteFlow {
    /// Times at block boundaries `0, h, 2h, …`.
    pub block_times: Vec<f64>,
    /// Tracked driver recursion `X̂^j` at block boundaries.
    pub x_hat: [Vec<f64>; 2],
    /// `z_values[i][k]` is the discrete image of `zs[i]` after `k` blocks.
    pub z_values: Vec<Vec<Carried>>,
    /// Blocks actually completed (may stop early at pair truncation).
    pub blocks_done: usize,
}

/// Run the block scheme with `steps_per_block` fine steps per block
/// (block length `h = steps_per_block · dt`), carrying the points `zs`.
///
/// Per block: each path grows its own single-pole hull driven by
/// `X̂^j + (B^j − B^j(block start))` (fine-grid midpoint freezing), the two
/// hull maps are composed in a fixed order on carried points (the ordering
/// asymmetry is O(h²)), and the tracked drivers are updated by mapping each
/// path's endpoint through the other hull map.
pub fn discrete_flow(pair: &PairPath, steps_per_block: usize, zs: &[Complex64]) -> DiscreteFlow {
    assert!(steps_per_block >= 1);
    let last = pair.last_index();
    let n_blocks = last / steps_per_block;
    let h = steps_per_block as f64 * pair.dt;
    let mut x_hat = [alloc::vec![pair.x[0][0]], alloc::vec![pair.x[1][0]]];
    let mut z_values: Vec<Vec<Carried>> = zs
        .iter()
        .map(|&z| alloc::vec![Carried::Alive(z)])
        .collect();
    let mut carried: Vec<Carried> = zs.iter().map(|&z| Carried::Alive(z)).collect();
    let mut cur = [x_hat[0][0], x_hat[1][0]];
    let mut blocks_done = 0;

    for b in 0..n_blocks {
        let k0 = b * steps_per_block;
        // within-block driver paths X̃^j(s) = X̂^j + ΣdB^j on the fine grid
        let mut tilde = [alloc::vec![cur[0]], alloc::vec![cur[1]]];
        for s in 0..steps_per_block {
            for j in 0..2 {
                let prev = *tilde[j].last().unwrap();
                tilde[j].push(prev + pair.db[j][k0 + s]);
            }
        }
        if tilde[1].last().unwrap() - tilde[0].last().unwrap() <= PAIR_GAP_FLOOR
            || tilde_cross(&tilde)
        {
            break;
        }

        // apply hull 1 then hull 2 to each carried point
        for c in carried.iter_mut() {
            if let Carried::Alive(z) = *c {
                match apply_one_pole_c(z, pair.a, &tilde[0], pair.dt) {
                    Some(w1) => match apply_one_pole_c(w1, pair.a, &tilde[1], pair.dt) {
                        Some(w2) => *c = Carried::Alive(w2),
                        None => *c = Carried::Absorbed { step: b },
                    },
                    None => *c = Carried::Absorbed { step: b },
                }
            }
        }

        // driver recursion: map each endpoint through the other hull
        let e1 = *tilde[0].last().unwrap();
        let e2 = *tilde[1].last().unwrap();
        let new1 = apply_one_pole_r(e1, pair.a, &tilde[1], pair.dt);
        let new2 = apply_one_pole_r(e2, pair.a, &tilde[0], pair.dt);
        match (new1, new2) {
            (Some(n1), Some(n2)) if n1 < n2 => {
                cur = [n1, n2];
            }
            _ => break,
        }

        blocks_done = b + 1;
        x_hat[0].push(cur[0]);
        x_hat[1].push(cur[1]);
        for (i, c) in carried.iter().enumerate() {
            z_values[i].push(*c);
        }
        let _ = h;
    }

    let block_times = (0..=blocks_done).map(|b| (b * steps_per_block) as f64 * pair.dt).collect();
    DiscreteFlow {
        block_times,
        x_hat,
        z_values,
        blocks_done,
    }
}

fn tilde_cross(tilde: &[Vec<f64>; 2]) -> bool {
    tilde[0]
        .iter()
        .zip(&tilde[1])
        .any(|(&a, &b)| b - a <= PAIR_GAP_FLOOR)
}

/// Flow a complex point through a single-pole hull with piecewise-midpoint
/// driver `xs` on substeps of length `dt`.
fn apply_one_pole_c(z: Complex64, a: f64, xs: &[f64], dt: f64) -> Option<Complex64> {
    let mut g = z;
    for s in 0..xs.len() - 1 {
        if g.im < ABSORB_IMAG {
            return None;
        }
        let x = 0.5 * (xs[s] + xs[s + 1]);
        let mid = one_pole_rk4_c(g, a, x, dt / 2.0);
        g = one_pole_rk4_c(mid, a, x, dt / 2.0);
    }
    if g.im < ABSORB_IMAG {
        None
    } else {
        Some(g)
    }
}

/// Same for a real point off the hull; fails when the point meets the pole.
fn apply_one_pole_r(y: f64, a: f64, xs: &[f64], dt: f64) -> Option<f64> {
    let mut g = y;
    for s in 0..xs.len() - 1 {
        let x = 0.5 * (xs[s] + xs[s + 1]);
        if crate::math::abs(g - x) < 1e-9 {
            return None;
        }
        // sub-divide when close to the pole: velocity ~ a/(g − x)
        let m = (1.0 + (crate::math::sqrt(dt) / crate::math::abs(g - x)).min(64.0)) as usize;
        let sub = dt / m as f64;
        for _ in 0..m {
            if crate::math::abs(g - x) < 1e-9 {
                return None;
            }
            let mid = one_pole_rk4_r(g, a, x, sub / 2.0);
            g = one_pole_rk4_r(mid, a, x, sub / 2.0);
            if !g.is_finite() {
                return None;
            }
        }
    }
    Some(g)
}

/// Sup-norm discrepancy `K(u, h)` of one coupled run: the continuous and the
/// block-discrete flow are compared at block boundaries over all grid points
/// with continuous image above height `u`, up to time `min(T, 1/u)` and
/// before truncation.
pub fn k_statistic(pair: &PairPath, steps_per_block: usize, u: f64, zs: &[Complex64]) -> Option<f64> {
    let disc = discrete_flow(pair, steps_per_block, zs);
    if disc.blocks_done == 0 {
        return None;
    }
    let t_cap = 1.0 / u;
    let mut k_sup: f64 = 0.0;
    let mut compared = false;
    for (i, &z) in zs.iter().enumerate() {
        let cont = continuous_flow(pair, z);
        for b in 1..=disc.blocks_done {
            let t = disc.block_times[b];
            if t > t_cap + 1e-12 {
                break;
            }
            let fine_idx = b * steps_per_block;
            if fine_idx >= cont.len() {
                break;
            }
            if let (Carried::Alive(gc), Carried::Alive(gd)) = (cont[fine_idx], disc.z_values[i][b]) {
                if gc.im >= u {
                    k_sup = k_sup.max((gc - gd).norm());
                    compared = true;
                }
            }
        }
    }
    if compared {
        Some(k_sup)
    } else {
        None
    }
}

/// Default grid of evaluation points for the discrepancy statistic.
pub fn default_z_grid(u: f64) -> Vec<Complex64> {
    let mut zs = Vec::new();
    let res = [u.max(0.5), 1.0, 2.0, 4.0];
    for &im in &res {
        for k in -4..=4 {
            zs.push(Complex64::new(k as f64 * 0.75, im));
        }
    }
    zs
}
