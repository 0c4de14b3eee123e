//! Numerical core for the n-radial Bessel / multi-slit Loewner laboratory.
//!
//! Everything in this crate is deterministic, allocation-only (`no_std`
//! compatible with `alloc`), and free of I/O.  The companion `nradial-lab`
//! crate supplies parallel Monte-Carlo drivers, file formats, and the CLI.
//!
//! Module map:
//!
//! * [`config`] — the ordered-angle configuration space, the sine-product
//!   potential `F_alpha`, the cosecant sum `psi`, drifts, and identities.
//! * [`quad`] — Gauss-Legendre quadrature and the normalization integrals.
//! * [`rng`] — counter-based random streams and dyadic Brownian paths.
//! * [`dyson`] — Euler–Maruyama integration of the circular interacting SDE
//!   with adaptive substepping and running functionals.
//! * [`loewner`] — multi-slit radial Loewner flow in the unit disk: forward
//!   maps, capacity checks, curve tracing, and the three driving laws.
//! * [`chordal`] — the two-path chordal flow and its block-composed discrete
//!   approximation, coupled through a shared Brownian path.
//! * [`lattice`] — square-lattice loop measure via Green-matrix determinants,
//!   self-avoiding-walk enumeration, and configurational weights.
//! * [`stats`] — estimates, weighted least squares, empirical CDF distances.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod chordal;
pub mod config;
pub mod dyson;
pub mod lattice;
pub mod loewner;
pub(crate) mod math;
pub mod quad;
pub mod rng;
pub mod stats;

pub use config::{AngleConfig, ConfigError, ModelParams};
pub use stats::Estimate;
