//! Convergence study for the block-discrete two-path approximation: the
//! discrepancy K(u, h) over coupled runs, its medians, and the fitted order.

use nradial_core::chordal::{default_z_grid, k_statistic, simulate_pair};
use nradial_core::rng::BrownianPath;
use nradial_core::stats::{weighted_line_fit, LineFit};

use crate::parallel_map;

#[derive(Debug, Clone)]
pub struct ApproxStudy {
    /// (h, run_id, K) per coupled run; None when the run was unusable
    /// (truncated before the first block or nothing above the height cut).
    pub rows: Vec<(f64, u64, Option<f64>)>,
    /// (h, median K) over usable runs, coarse to fine.
    pub medians: Vec<(f64, f64)>,
    /// Least-squares fit of log median K against log h.
    pub order: LineFit,
}

/// Run `n_runs` coupled continuous/discrete comparisons for every
/// `h = 2^{-e}`, all driven by the same per-run Brownian paths refined to
/// `level` (so finer h reuse exactly the same noise).
pub fn convergence_study(
    n_runs: u64,
    u: f64,
    h_exponents: &[u32],
    a: f64,
    seed: u64,
    level: u32,
) -> ApproxStudy {
    let zs = default_z_grid(u);
    let per_run: Vec<Vec<Option<f64>>> = parallel_map(n_runs, |run| {
        let bm = (
            BrownianPath::new(seed, 2 * run, 1.0, level),
            BrownianPath::new(seed, 2 * run + 1, 1.0, level),
        );
        let pair = simulate_pair(-0.5, 0.5, a, &bm);
        h_exponents
            .iter()
            .map(|&e| {
                let steps_per_block = 1usize << (level - e);
                k_statistic(&pair, steps_per_block, u, &zs)
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for (col, &e) in h_exponents.iter().enumerate() {
        let h = 0.5f64.powi(e as i32);
        let mut ks: Vec<f64> = Vec::new();
        for (run, vals) in per_run.iter().enumerate() {
            rows.push((h, run as u64, vals[col]));
            if let Some(k) = vals[col] {
                ks.push(k);
            }
        }
        ks.sort_by(f64::total_cmp);
        if !ks.is_empty() {
            medians.push((h, ks[ks.len() / 2]));
        }
    }

    let xs: Vec<f64> = medians.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|(_, m)| m.ln()).collect();
    let ws = vec![1.0; xs.len()];
    let order = weighted_line_fit(&xs, &ys, &ws);
    ApproxStudy {
        rows,
        medians,
        order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_study_shows_decay_with_h() {
        // cheap smoke version: 4 runs, two block sizes
        let study = convergence_study(4, 1.0, &[4, 6], 1.0, 77, 12);
        assert_eq!(study.medians.len(), 2);
        let (h_coarse, k_coarse) = study.medians[0];
        let (h_fine, k_fine) = study.medians[1];
        assert!(h_coarse > h_fine);
        assert!(k_fine < k_coarse, "{k_fine} !< {k_coarse}");
        assert!(study.order.slope > 0.0, "order {}", study.order.slope);
    }
}
