//! Two probes of quantum chaos in random-hopping Hamiltonians on
//! Watts-Strogatz graphs: spacing-ratio statistics of the spectrum, and a
//! self-organizing map trained on the raw Hamiltonian matrices.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod rng;
pub mod experiments;
pub mod som;
pub mod spectra;

pub use error::{Error, Result};
