//! Dissipaton-hierarchy dynamics for a two-level (or small) system coupled to a
//! Gaussian bath through either a linear coupling `S F` or the exponential,
//! phase-type coupling `S (e^{iλF} + e^{-iλF})`.
//!
//! The crate is `no_std` (with `alloc`). File formats, configuration and the
//! command line live in the `pcl-dyn` companion crate.
//!
//! Module map:
//!
//! - [`bath`]: spectral densities, correlation functions, exponential decompositions.
//! - [`algebra`]: single-dissipaton ordered-operator algebra (Hermite technique).
//! - [`hierarchy`]: multi-index enumeration and precomputed coupling tables.
//! - [`generator`]: right-hand side of the hierarchy equations.
//! - [`integrator`]: RK4 propagation, steady states, truncation scans.
//! - [`observables`]: Bloch components, entropy, eigen-populations, mean-force Hamiltonian.
//! - [`oracle`]: exact diagonalization of system plus truncated Fock modes.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod bath;
pub mod error;
pub mod generator;
pub mod hierarchy;
pub mod integrator;
pub mod linalg;
pub mod observables;
pub mod oracle;
mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for system operators and density matrices.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
