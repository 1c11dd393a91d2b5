//! Pathwise finite element solver for advection-diffusion equations whose
//! coefficients combine a log-Gaussian random field with piecewise-constant
//! jumps on a random partition of the domain.
//!
//! The crate is organised along the simulation pipeline:
//!
//! * [`random_field`] — covariance operators, truncated Karhunen-Loeve bases
//!   and pathwise field realizations,
//! * [`jump_model`] — random partitions, jump heights and the composed
//!   diffusion/advection coefficient pair,
//! * [`mesh`] — interface-fitted (sample-adapted) and uniform meshes,
//! * [`fem`] — P1 assembly, backward Euler stepping and lattice norms,
//! * [`experiment`] — coupled Monte Carlo sampling, RMSE estimation and
//!   convergence-rate regression.

pub mod error;
pub mod experiment;
pub mod fem;
pub mod jump_model;
pub mod mesh;
pub mod random_field;

pub use error::{Error, Result};

/// A point of the computational domain. One-dimensional problems use the
/// first coordinate and keep the second at zero.
pub type Point = [f64; 2];
