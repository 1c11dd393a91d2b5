//! Sample-adapted and uniform simplicial meshes.
//!
//! Adapted meshes subdivide every partition cell separately, so each jump
//! interface is a union of element edges and no element straddles a jump.
//! Uniform meshes ignore the partition; elements crossing an interface are
//! marked with a straddle flag and take their coefficient from the cell that
//! contains the element centroid.
//!
//! `h` records the realized maximum axis-aligned edge length (the subdivision
//! pitch); 2D elements are right triangles, so their hypotenuse is `sqrt(2) h`.

use std::io::Write;

use crate::jump_model::{Located, Partition};
use crate::{Error, Point, Result};

/// Distinct interface lines closer than this collapse a mesh strip to zero
/// width and are rejected.
const MIN_GAP: f64 = 1e-9;

/// One-dimensional mesh: cells are the intervals between consecutive
/// vertices.
pub struct Mesh1d {
    pub vertices: Vec<f64>,
    /// partition cell owning each element (by centroid for uniform meshes)
    pub cell_to_partition: Vec<usize>,
    /// element contains a jump point in its interior
    pub straddle: Vec<bool>,
    pub h: f64,
    pub h_bar: f64,
}

impl Mesh1d {
    pub fn cell_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        (self.vertices[cell], self.vertices[cell + 1])
    }

    pub fn centroid(&self, cell: usize) -> f64 {
        0.5 * (self.vertices[cell] + self.vertices[cell + 1])
    }

    pub fn boundary_vertex(&self, v: usize) -> bool {
        v == 0 || v == self.vertices.len() - 1
    }

    /// Index of the cell containing x (clamped to the domain).
    pub fn locate(&self, x: f64) -> usize {
        let n = self.cell_count();
        match self.vertices.binary_search_by(|probe| probe.total_cmp(&x)) {
            Ok(idx) => idx.min(n - 1),
            Err(ins) => ins.saturating_sub(1).min(n - 1),
        }
    }
}

/// Two-dimensional conforming triangulation of the unit square built on a
/// tensor grid; every rectangle splits along the lower-left to upper-right
/// diagonal.
pub struct Mesh2d {
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    pub vertices: Vec<Point>,
    /// counterclockwise vertex triples; rectangle r owns triangles 2r, 2r+1
    pub triangles: Vec<[usize; 3]>,
    pub cell_to_partition: Vec<usize>,
    pub straddle: Vec<bool>,
    pub h: f64,
    pub h_bar: f64,
}

impl Mesh2d {
    pub fn nx(&self) -> usize {
        self.grid_x.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.grid_y.len() - 1
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * self.grid_x.len() + i
    }

    pub fn cell_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_vertex(&self, v: usize) -> bool {
        let cols = self.grid_x.len();
        let (i, j) = (v % cols, v / cols);
        i == 0 || i == cols - 1 || j == 0 || j == self.grid_y.len() - 1
    }

    pub fn centroid(&self, cell: usize) -> Point {
        let [a, b, c] = self.triangles[cell];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(va[0] + vb[0] + vc[0]) / 3.0, (va[1] + vb[1] + vc[1]) / 3.0]
    }

    pub fn triangle_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.triangles[cell];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((vb[0] - va[0]) * (vc[1] - va[1]) - (vc[0] - va[0]) * (vb[1] - va[1]))
    }

    /// Rectangle (i, j) containing the point, clamped to the grid.
    pub fn locate_rect(&self, p: Point) -> (usize, usize) {
        (axis_cell(&self.grid_x, p[0]), axis_cell(&self.grid_y, p[1]))
    }
}

fn axis_cell(cuts: &[f64], x: f64) -> usize {
    let n = cuts.len() - 1;
    match cuts.binary_search_by(|probe| probe.total_cmp(&x)) {
        Ok(idx) => idx.min(n - 1),
        Err(ins) => ins.saturating_sub(1).min(n - 1),
    }
}

pub enum Mesh {
    One(Mesh1d),
    Two(Mesh2d),
}

impl Mesh {
    pub fn dim(&self) -> usize {
        match self {
            Mesh::One(_) => 1,
            Mesh::Two(_) => 2,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Mesh::One(m) => m.h,
            Mesh::Two(m) => m.h,
        }
    }

    pub fn h_bar(&self) -> f64 {
        match self {
            Mesh::One(m) => m.h_bar,
            Mesh::Two(m) => m.h_bar,
        }
    }

    pub fn cell_count(&self) -> usize {
        match self {
            Mesh::One(m) => m.cell_count(),
            Mesh::Two(m) => m.cell_count(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Mesh::One(m) => m.vertices.len(),
            Mesh::Two(m) => m.vertices.len(),
        }
    }

    pub fn as_1d(&self) -> &Mesh1d {
        match self {
            Mesh::One(m) => m,
            Mesh::Two(_) => panic!("expected a 1d mesh"),
        }
    }

    pub fn as_2d(&self) -> &Mesh2d {
        match self {
            Mesh::Two(m) => m,
            Mesh::One(_) => panic!("expected a 2d mesh"),
        }
    }

    /// Plain-text dump: vertices, then cells with their partition ids.
    pub fn dump_text<W: Write>(&self, out: &mut W) -> Result<()> {
        match self {
            Mesh::One(m) => {
                writeln!(out, "dim 1")?;
                writeln!(out, "vertices {}", m.vertices.len())?;
                for v in &m.vertices {
                    writeln!(out, "{v:.17e}")?;
                }
                writeln!(out, "cells {}", m.cell_count())?;
                for c in 0..m.cell_count() {
                    writeln!(
                        out,
                        "{} {} partition {} straddle {}",
                        c,
                        c + 1,
                        m.cell_to_partition[c],
                        u8::from(m.straddle[c])
                    )?;
                }
            }
            Mesh::Two(m) => {
                writeln!(out, "dim 2")?;
                writeln!(out, "vertices {}", m.vertices.len())?;
                for v in &m.vertices {
                    writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
                }
                writeln!(out, "cells {}", m.triangles.len())?;
                for (c, t) in m.triangles.iter().enumerate() {
                    writeln!(
                        out,
                        "{} {} {} partition {} straddle {}",
                        t[0],
                        t[1],
                        t[2],
                        m.cell_to_partition[c],
                        u8::from(m.straddle[c])
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Number of equal pieces a span of length `len` needs so each piece is at
/// most `h` long (with a guard against say 1/0.1 rounding up spuriously).
fn pieces(len: f64, h: f64) -> usize {
    ((len / h - 1e-9).ceil() as usize).max(1)
}

/// Subdivide `[cuts[0], cuts.last()]` so every fixed cut stays a mesh vertex
/// and no piece exceeds `h`.
fn subdivide_axis(cuts: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut grid = Vec::new();
    for (k, window) in cuts.windows(2).enumerate() {
        let (a, b) = (window[0], window[1]);
        if b - a < MIN_GAP {
            return Err(Error::DegeneratePartition {
                a,
                b,
                min_gap: MIN_GAP,
            });
        }
        let n = pieces(b - a, h);
        for s in 0..n {
            grid.push(a + (b - a) * s as f64 / n as f64);
        }
        if k == cuts.len() - 2 {
            grid.push(b);
        }
    }
    Ok(grid)
}

/// Interface-fitted 1D mesh: every partition interval is split into
/// ceil(width / h_bar) equal cells, so all jump points are vertices.
pub fn adapted_mesh_1d(partition: &Partition, h_bar: f64) -> Result<Mesh> {
    assert!(h_bar > 0.0, "h_bar must be positive");
    if partition.dim() != 1 {
        return Err(Error::config(
            "mesh",
            "adapted_mesh_1d needs a 1d partition",
        ));
    }
    let (breaks, _) = partition.cuts();
    let vertices = subdivide_axis(breaks, h_bar)?;
    let mut cell_to_partition = Vec::with_capacity(vertices.len() - 1);
    let mut h: f64 = 0.0;
    let mut owner = 0usize;
    for w in vertices.windows(2) {
        // advance the owning partition interval; cells never straddle
        while breaks[owner + 1] <= w[0] + MIN_GAP * 0.5 && owner + 2 < breaks.len() {
            owner += 1;
        }
        cell_to_partition.push(owner);
        h = h.max(w[1] - w[0]);
    }
    let straddle = vec![false; cell_to_partition.len()];
    Ok(Mesh::One(Mesh1d {
        vertices,
        cell_to_partition,
        straddle,
        h,
        h_bar,
    }))
}

/// Interface-fitted 2D triangulation: the x- and y-interface lines are mesh
/// lines, every partition strip is subdivided uniformly to pitch at most
/// h_bar, and each rectangle splits along a fixed diagonal.
pub fn adapted_mesh_2d(partition: &Partition, h_bar: f64) -> Result<Mesh> {
    assert!(h_bar > 0.0, "h_bar must be positive");
    if partition.dim() != 2 {
        return Err(Error::config(
            "mesh",
            "adapted_mesh_2d needs a 2d partition",
        ));
    }
    let (x_cuts, y_cuts) = partition.cuts();
    let grid_x = subdivide_axis(x_cuts, h_bar)?;
    let grid_y = subdivide_axis(y_cuts, h_bar)?;
    build_triangulation(grid_x, grid_y, partition, h_bar)
}

/// Uniform mesh ignoring any partition: `h` is the subdivision pitch. Cell
/// ownership is trivial until [`attach_partition`] maps centroids.
pub fn uniform_mesh(dim: usize, h: f64) -> Result<Mesh> {
    assert!(h > 0.0, "h must be positive");
    let n = pieces(1.0, h);
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    match dim {
        1 => {
            let cells = grid.len() - 1;
            Ok(Mesh::One(Mesh1d {
                h: grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
                vertices: grid,
                cell_to_partition: vec![0; cells],
                straddle: vec![false; cells],
                h_bar: h,
            }))
        }
        2 => {
            let single = Partition::rectilinear(vec![], vec![], false)?;
            build_triangulation(grid.clone(), grid, &single, h)
        }
        other => Err(Error::config(
            "mesh",
            format!("unsupported dimension {other}"),
        )),
    }
}

/// Recompute centroid ownership and straddle flags against a partition.
pub fn attach_partition(mesh: &mut Mesh, partition: &Partition) -> Result<()> {
    match mesh {
        Mesh::One(m) => {
            if partition.dim() != 1 {
                return Err(Error::config("mesh", "dimension mismatch"));
            }
            for cell in 0..m.cell_count() {
                let (a, b) = m.cell_bounds(cell);
                m.cell_to_partition[cell] = locate_owner(partition, [m.centroid(cell), 0.0])?;
                m.straddle[cell] = partition.has_interface_in_box([a, 0.0], [b, 0.0]);
            }
        }
        Mesh::Two(m) => {
            if partition.dim() != 2 {
                return Err(Error::config("mesh", "dimension mismatch"));
            }
            for cell in 0..m.cell_count() {
                m.cell_to_partition[cell] = locate_owner(partition, m.centroid(cell))?;
                // a right triangle from the rectangle split spans the full
                // rectangle extent on both axes, so its bounding box decides
                let (i, j) = {
                    let rect = cell / 2;
                    (rect % m.nx(), rect / m.nx())
                };
                let lo = [m.grid_x[i], m.grid_y[j]];
                let hi = [m.grid_x[i + 1], m.grid_y[j + 1]];
                m.straddle[cell] = partition.has_interface_in_box(lo, hi);
            }
        }
    }
    Ok(())
}

/// Centroids of adapted meshes are strictly inside a partition cell; uniform
/// meshes can in principle put one exactly on an interface, in which case the
/// tie breaks toward the lower cell deterministically.
fn locate_owner(partition: &Partition, p: Point) -> Result<usize> {
    match partition.locate(p)? {
        Located::Inside(cell) => Ok(cell),
        Located::OnInterface => {
            let nudged = [p[0] - 1e-12, p[1] - 1e-12];
            match partition.locate(nudged)? {
                Located::Inside(cell) => Ok(cell),
                Located::OnInterface => Err(Error::AmbiguousInterface { x: p[0], y: p[1] }),
            }
        }
    }
}

fn build_triangulation(
    grid_x: Vec<f64>,
    grid_y: Vec<f64>,
    partition: &Partition,
    h_bar: f64,
) -> Result<Mesh> {
    let nx = grid_x.len() - 1;
    let ny = grid_y.len() - 1;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &grid_y {
        for &x in &grid_x {
            vertices.push([x, y]);
        }
    }
    let cols = nx + 1;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut cell_to_partition = Vec::with_capacity(2 * nx * ny);
    let mut straddle = Vec::with_capacity(2 * nx * ny);
    let mut h: f64 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let v00 = j * cols + i;
            let v10 = v00 + 1;
            let v01 = v00 + cols;
            let v11 = v01 + 1;
            let centroid_low = [
                (2.0 * grid_x[i + 1] + grid_x[i]) / 3.0,
                (grid_y[j + 1] + 2.0 * grid_y[j]) / 3.0,
            ];
            let centroid_high = [
                (2.0 * grid_x[i] + grid_x[i + 1]) / 3.0,
                (grid_y[j] + 2.0 * grid_y[j + 1]) / 3.0,
            ];
            let crossing = partition
                .has_interface_in_box([grid_x[i], grid_y[j]], [grid_x[i + 1], grid_y[j + 1]]);
            triangles.push([v00, v10, v11]);
            cell_to_partition.push(locate_owner(partition, centroid_low)?);
            straddle.push(crossing);
            triangles.push([v00, v11, v01]);
            cell_to_partition.push(locate_owner(partition, centroid_high)?);
            straddle.push(crossing);
            h = h
                .max(grid_x[i + 1] - grid_x[i])
                .max(grid_y[j + 1] - grid_y[j]);
        }
    }
    Ok(Mesh::Two(Mesh2d {
        grid_x,
        grid_y,
        vertices,
        triangles,
        cell_to_partition,
        straddle,
        h,
        h_bar,
    }))
}

/// Circumradius over inradius of one triangle.
pub fn triangle_quality(a: Point, b: Point, c: Point) -> Result<f64> {
    let side = |p: Point, q: Point| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let (la, lb, lc) = (side(b, c), side(a, c), side(a, b));
    let s = 0.5 * (la + lb + lc);
    let area_sq = s * (s - la) * (s - lb) * (s - lc);
    if !(area_sq > 0.0) {
        return Err(Error::Geometry(format!(
            "triangle with vertices {a:?}, {b:?}, {c:?} has no area"
        )));
    }
    let area = area_sq.sqrt();
    let circum = la * lb * lc / (4.0 * area);
    let inradius = area / s;
    Ok(circum / inradius)
}

/// Shape-regularity ratio of the mesh: max over triangles of
/// circumradius / inradius.
pub fn shape_regularity(mesh: &Mesh) -> Result<f64> {
    let m = match mesh {
        Mesh::Two(m) => m,
        Mesh::One(_) => {
            return Err(Error::Geometry(
                "shape regularity is defined for 2d meshes".into(),
            ))
        }
    };
    let mut worst: f64 = 0.0;
    for t in &m.triangles {
        let q = triangle_quality(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]])?;
        worst = worst.max(q);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
