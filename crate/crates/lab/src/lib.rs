//! Experiment layer over `nradial-core`: parallel Monte-Carlo drivers,
//! plain-text configuration, manifests, and CSV/JSON emission.

pub mod cfgfile;
pub mod emit;
pub mod experiments;
pub mod manifest;

/// Map path indices to results in parallel with a deterministic output
/// order, so reductions are bitwise independent of the thread count.
pub fn parallel_map<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}
