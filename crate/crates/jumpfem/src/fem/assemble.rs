//! P1 Galerkin assembly with one-point (centroid) quadrature for the
//! coefficients and exact integration of the mass matrix. Homogeneous
//! Dirichlet rows and columns are eliminated, so the system acts on the free
//! vertices only.

use super::sparse::CsrMatrix;
use crate::jump_model::CoefficientPair;
use crate::mesh::{Mesh, Mesh1d, Mesh2d};
use crate::{Error, Point, Result};

/// Mass and stiffness matrices over the free vertices of one mesh, sharing a
/// single sparsity pattern.
pub struct SparseSystem {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub dof_of_vertex: Vec<Option<usize>>,
    pub vertex_of_dof: Vec<usize>,
}

impl SparseSystem {
    /// Number of free degrees of freedom.
    pub fn dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// M-weighted norm sqrt(x^T M x).
    pub fn mass_norm(&self, x: &[f64]) -> f64 {
        self.mass.quadratic_form(x).max(0.0).sqrt()
    }
}

fn dof_map(
    is_boundary: impl Fn(usize) -> bool,
    vertex_count: usize,
) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut dof_of_vertex = vec![None; vertex_count];
    let mut vertex_of_dof = Vec::new();
    for v in 0..vertex_count {
        if !is_boundary(v) {
            dof_of_vertex[v] = Some(vertex_of_dof.len());
            vertex_of_dof.push(v);
        }
    }
    (dof_of_vertex, vertex_of_dof)
}

fn pattern_from_elements(
    elements: impl Iterator<Item = Vec<usize>> + Clone,
    dof_of_vertex: &[Option<usize>],
    n_dofs: usize,
) -> Vec<Vec<usize>> {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n_dofs];
    for element in elements {
        for &a in &element {
            let Some(i) = dof_of_vertex[a] else { continue };
            for &b in &element {
                if let Some(j) = dof_of_vertex[b] {
                    neighbors[i].push(j);
                }
            }
        }
    }
    for row in neighbors.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    neighbors
}

/// Assemble the mass matrix and the diffusion-advection stiffness matrix.
/// The coefficients are sampled once per element at the centroid, with the
/// partition cell id supplied by the mesh.
pub fn assemble(mesh: &Mesh, coeff: &CoefficientPair) -> Result<SparseSystem> {
    match mesh {
        Mesh::One(m) => assemble_1d(m, coeff),
        Mesh::Two(m) => assemble_2d(m, coeff),
    }
}

fn check_positive(a: f64, p: Point) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::CoefficientInvalid {
            x: p[0],
            y: p[1],
            value: a,
        });
    }
    Ok(())
}

fn assemble_1d(mesh: &Mesh1d, coeff: &CoefficientPair) -> Result<SparseSystem> {
    let nv = mesh.vertices.len();
    let (dof_of_vertex, vertex_of_dof) = dof_map(|v| mesh.boundary_vertex(v), nv);
    let n_dofs = vertex_of_dof.len();
    let elements = (0..mesh.cell_count()).map(|k| vec![k, k + 1]);
    let pattern = pattern_from_elements(elements, &dof_of_vertex, n_dofs);
    let mut mass = CsrMatrix::from_pattern(&pattern);
    let mut stiffness = CsrMatrix::from_pattern(&pattern);

    for cell in 0..mesh.cell_count() {
        let (x0, x1) = mesh.cell_bounds(cell);
        let h = x1 - x0;
        let centroid = [0.5 * (x0 + x1), 0.0];
        let (a, b) = coeff.values(centroid, mesh.cell_to_partition[cell]);
        check_positive(a, centroid)?;

        // local vertex order: [left, right]
        let verts = [cell, cell + 1];
        let grad = [-1.0 / h, 1.0 / h];
        let mass_local = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for (li, &vi) in verts.iter().enumerate() {
            let Some(i) = dof_of_vertex[vi] else { continue };
            for (lj, &vj) in verts.iter().enumerate() {
                let Some(j) = dof_of_vertex[vj] else { continue };
                mass.add(i, j, mass_local[li][lj]);
                // diffusion a grad u grad v plus advection b u' v at the
                // centroid, where every hat takes value 1/2
                let diffusion = a * grad[li] * grad[lj] * h;
                let advection = b[0] * grad[lj] * 0.5 * h;
                stiffness.add(i, j, diffusion + advection);
            }
        }
    }
    Ok(SparseSystem {
        mass,
        stiffness,
        dof_of_vertex,
        vertex_of_dof,
    })
}

fn assemble_2d(mesh: &Mesh2d, coeff: &CoefficientPair) -> Result<SparseSystem> {
    let nv = mesh.vertices.len();
    let (dof_of_vertex, vertex_of_dof) = dof_map(|v| mesh.boundary_vertex(v), nv);
    let n_dofs = vertex_of_dof.len();
    let elements = mesh.triangles.iter().map(|t| t.to_vec());
    let pattern = pattern_from_elements(elements, &dof_of_vertex, n_dofs);
    let mut mass = CsrMatrix::from_pattern(&pattern);
    let mut stiffness = CsrMatrix::from_pattern(&pattern);

    for (cell, tri) in mesh.triangles.iter().enumerate() {
        let p: [Point; 3] = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let area = mesh.triangle_area(cell);
        if area <= 0.0 {
            return Err(Error::Geometry(format!(
                "triangle {cell} has nonpositive area {area}"
            )));
        }
        let centroid = mesh.centroid(cell);
        let (a, b) = coeff.values(centroid, mesh.cell_to_partition[cell]);
        check_positive(a, centroid)?;

        // constant P1 gradients: grad lambda_i = rot(p_{i+1} - p_{i+2}) / (2 area)
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let q = p[(i + 1) % 3];
            let r = p[(i + 2) % 3];
            grads[i] = [(q[1] - r[1]) / (2.0 * area), (r[0] - q[0]) / (2.0 * area)];
        }
        for (li, &vi) in tri.iter().enumerate() {
            let Some(i) = dof_of_vertex[vi] else { continue };
            for (lj, &vj) in tri.iter().enumerate() {
                let Some(j) = dof_of_vertex[vj] else { continue };
                let mass_entry = area / 12.0 * if li == lj { 2.0 } else { 1.0 };
                mass.add(i, j, mass_entry);
                let diffusion =
                    a * area * (grads[li][0] * grads[lj][0] + grads[li][1] * grads[lj][1]);
                // hats take value 1/3 at the centroid
                let advection = area * (b[0] * grads[lj][0] + b[1] * grads[lj][1]) / 3.0;
                stiffness.add(i, j, diffusion + advection);
            }
        }
    }
    Ok(SparseSystem {
        mass,
        stiffness,
        dof_of_vertex,
        vertex_of_dof,
    })
}

/// Midpoint-rule load vector: (F)_j = sum_K |K| f(centroid_K, t) v_j(centroid_K).
pub fn assemble_load(
    mesh: &Mesh,
    sys: &SparseSystem,
    f: &dyn Fn(Point, f64) -> f64,
    t: f64,
) -> Vec<f64> {
    let mut load = vec![0.0; sys.dofs()];
    match mesh {
        Mesh::One(m) => {
            for cell in 0..m.cell_count() {
                let (x0, x1) = m.cell_bounds(cell);
                let h = x1 - x0;
                let value = f([0.5 * (x0 + x1), 0.0], t);
                for v in [cell, cell + 1] {
                    if let Some(dof) = sys.dof_of_vertex[v] {
                        load[dof] += h * value * 0.5;
                    }
                }
            }
        }
        Mesh::Two(m) => {
            for (cell, tri) in m.triangles.iter().enumerate() {
                let area = m.triangle_area(cell);
                let value = f(m.centroid(cell), t);
                for &v in tri {
                    if let Some(dof) = sys.dof_of_vertex[v] {
                        load[dof] += area * value / 3.0;
                    }
                }
            }
        }
    }
    load
}

/// Nodal interpolation of a continuous function onto the free vertices;
/// boundary values are implicitly zero.
pub fn nodal_interpolate(mesh: &Mesh, sys: &SparseSystem, g: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let point_of = |v: usize| -> Point {
        match mesh {
            Mesh::One(m) => [m.vertices[v], 0.0],
            Mesh::Two(m) => m.vertices[v],
        }
    };
    sys.vertex_of_dof.iter().map(|&v| g(point_of(v))).collect()
}
