//! P1 finite elements: assembly, direct/iterative solves, backward Euler
//! stepping and lattice-based error norms.

mod assemble;
mod lattice;
mod solver;
mod sparse;
mod stepping;

pub use assemble::{assemble, assemble_load, nodal_interpolate, SparseSystem};
pub use lattice::{
    evaluate_on_grid, evaluate_state_on_grid, grid_norm, lattice_point, parabolic_sup_norm,
    GridNorm, Lattice,
};
pub use solver::{
    set_deterministic_parallelism, solve_linear, BandedLu, BiCgStab, Factorization, SolverKind,
    SparseDirect, RESIDUAL_TOLERANCE,
};
pub use sparse::CsrMatrix;
pub use stepping::{backward_euler, StoreMode, Trajectory};

#[cfg(test)]
mod tests;
