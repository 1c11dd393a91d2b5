//! Evaluation of discrete solutions on a fixed reference lattice and the
//! norms computed there.
//!
//! Errors between discretization levels are measured by prolonging both
//! solutions to the same fine lattice and differencing nodal values, with
//! gradients from one-sided differences. On the lattice scale that
//! prolongation error is negligible next to the discretization error.

use super::assemble::SparseSystem;
use super::stepping::Trajectory;
use crate::mesh::Mesh;
use crate::{Error, Point, Result};

/// Uniform evaluation lattice: `points_per_axis` nodes on [0, 1] per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub dim: usize,
    pub points_per_axis: usize,
}

impl Lattice {
    pub fn new(dim: usize, points_per_axis: usize) -> Self {
        assert!(points_per_axis >= 2);
        assert!(dim == 1 || dim == 2);
        Lattice {
            dim,
            points_per_axis,
        }
    }

    pub fn point_count(&self) -> usize {
        match self.dim {
            1 => self.points_per_axis,
            _ => self.points_per_axis * self.points_per_axis,
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points_per_axis - 1) as f64
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }
}

/// Scalar norms over lattice values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridNorm {
    L2,
    H1Semi,
    /// full H1 norm, the V-norm used for the error studies
    H1,
}

/// Evaluate the space-time interpolant of a trajectory at time `t` on the
/// lattice: P1 in space, linear between the stored time nodes.
pub fn evaluate_on_grid(
    mesh: &Mesh,
    sys: &SparseSystem,
    traj: &Trajectory,
    t: f64,
    lattice: &Lattice,
) -> Result<Vec<f64>> {
    if t < -1e-12 || t > traj.horizon() + 1e-12 {
        return Err(Error::config("time", format!("t = {t} outside [0, T]")));
    }
    let state = blend_states(traj, t)?;
    evaluate_state_on_grid(mesh, sys, &state, lattice)
}

fn blend_states(traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let times = &traj.times;
    let last = times.len() - 1;
    if t >= times[last] {
        return Ok(traj.states[last].clone());
    }
    if t <= times[0] {
        return Ok(traj.states[0].clone());
    }
    let hi = times.partition_point(|&node| node < t).clamp(1, last);
    let (t0, t1) = (times[hi - 1], times[hi]);
    if t1 - t0 <= 0.0 {
        return Err(Error::config("time", "degenerate time bracket"));
    }
    let theta = (t - t0) / (t1 - t0);
    Ok(traj.states[hi - 1]
        .iter()
        .zip(&traj.states[hi])
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect())
}

/// P1 evaluation of one coefficient vector on the lattice.
pub fn evaluate_state_on_grid(
    mesh: &Mesh,
    sys: &SparseSystem,
    state: &[f64],
    lattice: &Lattice,
) -> Result<Vec<f64>> {
    if lattice.dim != mesh.dim() {
        return Err(Error::config("lattice", "dimension mismatch with mesh"));
    }
    let vertex_value = |v: usize| sys.dof_of_vertex[v].map_or(0.0, |dof| state[dof]);
    let n = lattice.points_per_axis;
    match mesh {
        Mesh::One(m) => {
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                let x = lattice.coordinate(k);
                let cell = m.locate(x);
                let (x0, x1) = m.cell_bounds(cell);
                let theta = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                out.push((1.0 - theta) * vertex_value(cell) + theta * vertex_value(cell + 1));
            }
            Ok(out)
        }
        Mesh::Two(m) => {
            let mut out = Vec::with_capacity(n * n);
            for jy in 0..n {
                let y = lattice.coordinate(jy);
                for ix in 0..n {
                    let x = lattice.coordinate(ix);
                    let (i, j) = m.locate_rect([x, y]);
                    let (x0, x1) = (m.grid_x[i], m.grid_x[i + 1]);
                    let (y0, y1) = (m.grid_y[j], m.grid_y[j + 1]);
                    let xi = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                    let eta = ((y - y0) / (y1 - y0)).clamp(0.0, 1.0);
                    let v00 = vertex_value(m.vertex_index(i, j));
                    let v10 = vertex_value(m.vertex_index(i + 1, j));
                    let v01 = vertex_value(m.vertex_index(i, j + 1));
                    let v11 = vertex_value(m.vertex_index(i + 1, j + 1));
                    // rectangle split along the lower-left/upper-right diagonal
                    let value = if xi >= eta {
                        v00 * (1.0 - xi) + v10 * (xi - eta) + v11 * eta
                    } else {
                        v00 * (1.0 - eta) + v11 * xi + v01 * (eta - xi)
                    };
                    out.push(value);
                }
            }
            Ok(out)
        }
    }
}

/// Composite-trapezoid L2 and one-sided-difference H1 quantities on the
/// lattice.
pub fn grid_norm(lattice: &Lattice, values: &[f64], kind: GridNorm) -> f64 {
    assert_eq!(values.len(), lattice.point_count());
    match kind {
        GridNorm::L2 => l2_norm(lattice, values),
        GridNorm::H1Semi => h1_seminorm(lattice, values),
        GridNorm::H1 => {
            let l2 = l2_norm(lattice, values);
            let semi = h1_seminorm(lattice, values);
            (l2 * l2 + semi * semi).sqrt()
        }
    }
}

fn l2_norm(lattice: &Lattice, values: &[f64]) -> f64 {
    let n = lattice.points_per_axis;
    let h = lattice.spacing();
    let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    match lattice.dim {
        1 => {
            let acc: f64 = values.iter().enumerate().map(|(k, v)| w(k) * v * v).sum();
            (acc * h).sqrt()
        }
        _ => {
            let mut acc = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let v = values[j * n + i];
                    acc += w(i) * w(j) * v * v;
                }
            }
            (acc * h * h).sqrt()
        }
    }
}

fn h1_seminorm(lattice: &Lattice, values: &[f64]) -> f64 {
    let n = lattice.points_per_axis;
    let h = lattice.spacing();
    let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    match lattice.dim {
        1 => {
            let acc: f64 = values
                .windows(2)
                .map(|v| {
                    let g = (v[1] - v[0]) / h;
                    g * g
                })
                .sum();
            (acc * h).sqrt()
        }
        _ => {
            // forward differences along each axis, trapezoid across it
            let mut acc = 0.0;
            for j in 0..n {
                for i in 0..n - 1 {
                    let g = (values[j * n + i + 1] - values[j * n + i]) / h;
                    acc += w(j) * g * g;
                }
            }
            for j in 0..n - 1 {
                for i in 0..n {
                    let g = (values[(j + 1) * n + i] - values[j * n + i]) / h;
                    acc += w(i) * g * g;
                }
            }
            (acc * h * h).sqrt()
        }
    }
}

/// Pathwise parabolic norm over trajectory snapshots on the lattice:
/// max over time nodes of (L2(t)^2 + integral_0^t H1-seminorm^2 dz)^{1/2},
/// the time integral by the trapezoid rule over the snapshots.
pub fn parabolic_sup_norm(lattice: &Lattice, times: &[f64], snapshots: &[Vec<f64>]) -> f64 {
    assert_eq!(times.len(), snapshots.len());
    let semis: Vec<f64> = snapshots
        .iter()
        .map(|v| {
            let s = h1_seminorm(lattice, v);
            s * s
        })
        .collect();
    let mut best: f64 = 0.0;
    let mut integral = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            integral += 0.5 * (semis[k] + semis[k - 1]) * (times[k] - times[k - 1]);
        }
        let l2 = l2_norm(lattice, &snapshots[k]);
        best = best.max((l2 * l2 + integral).sqrt());
    }
    best
}

/// Lattice coordinates of point index `k`.
pub fn lattice_point(lattice: &Lattice, k: usize) -> Point {
    let n = lattice.points_per_axis;
    match lattice.dim {
        1 => [lattice.coordinate(k), 0.0],
        _ => [lattice.coordinate(k % n), lattice.coordinate(k / n)],
    }
}
