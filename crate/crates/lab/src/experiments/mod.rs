//! Experiment implementations, one module per CLI kind.

pub mod approx;
pub mod dyson;
pub mod identities;
pub mod lattice;
pub mod trace;
