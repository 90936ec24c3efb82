//! Numerical laboratory for a nearest-neighbor Fourier mode lattice arising
//! from a sinusoidally perturbed linear shear flow.
//!
//! The library covers:
//! - the lattice ODE, its coupling coefficient, and a parameter-regime
//!   classifier ([`lattice`]);
//! - adaptive, resonance-aware time stepping with dynamic window management
//!   and an a-priori growth-bound check ([`integrate`]);
//! - Fourier weights and weighted functionals whose monotonicity certifies
//!   stability for small c·L ([`lyapunov`]);
//! - nearest-neighbor path enumeration, iterated Duhamel integrals, Picard
//!   partial sums, and the closed-form bound constants of the path-sum
//!   arguments ([`duhamel`]);
//! - the resonance-cascade instability experiment for long tori ([`cascade`]);
//! - a deterministic CLI with CSV artifacts and parameter sweeps
//!   ([`config`], [`runner`], [`output`]).

// Validation uses `!(x > 0.0)`-style comparisons on purpose: they reject NaN
// where the un-negated form would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod integrate;
pub mod lattice;
pub mod lyapunov;
pub mod output;
pub mod quad;
pub mod runner;

mod rk;

pub use error::{Error, Result};
