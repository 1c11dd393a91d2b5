use super::*;
use crate::jump_model::{sample_partition_1d, sample_partition_2d, Partition, Partition2dKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn adapted_1d_subdivides_each_interval() {
    let p = Partition::from_breaks(vec![0.0, 0.3, 1.0]).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.25).unwrap();
    let m = mesh.as_1d();
    assert!(m.vertices.iter().any(|&v| v == 0.3));
    // (0, 0.3) -> 2 cells of 0.15; (0.3, 1) -> 3 cells of 0.2333...
    assert_eq!(m.cell_count(), 5);
    let widths: Vec<f64> = m.vertices.windows(2).map(|w| w[1] - w[0]).collect();
    assert!((widths[0] - 0.15).abs() < 1e-12 && (widths[1] - 0.15).abs() < 1e-12);
    for w in &widths[2..] {
        assert!((w - 0.7 / 3.0).abs() < 1e-12);
    }
    assert!(m.h <= 0.25 + 1e-12);
    assert_eq!(m.cell_to_partition, vec![0, 0, 1, 1, 1]);
    assert!(m.straddle.iter().all(|s| !s));
}

#[test]
fn adapted_1d_trivial_partition_is_uniform() {
    let p = Partition::from_breaks(vec![0.0, 1.0]).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.5).unwrap();
    assert_eq!(mesh.cell_count(), 2);
    assert_eq!(mesh.vertex_count(), 3);
}

#[test]
fn adapted_1d_keeps_tiny_cells_intact() {
    let p = Partition::from_breaks(vec![0.0, 1e-3, 1.0]).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.25).unwrap();
    let m = mesh.as_1d();
    let widths: Vec<f64> = m.vertices.windows(2).map(|w| w[1] - w[0]).collect();
    assert!((widths[0] - 1e-3).abs() < 1e-15);
    assert!(widths.iter().all(|&w| w > 0.0 && w <= 0.25 + 1e-12));
}

#[test]
fn aligned_checkerboard_needs_no_extra_cuts() {
    let p = Partition::rectilinear(vec![0.5], vec![0.5], true).unwrap();
    let mesh = adapted_mesh_2d(&p, 0.5).unwrap();
    let m = mesh.as_2d();
    assert_eq!(m.nx() * m.ny(), 4);
    assert_eq!(m.triangles.len(), 8);
    // the interface lines are mesh lines
    assert!(m.grid_x.contains(&0.5) && m.grid_y.contains(&0.5));
    assert!(m.straddle.iter().all(|s| !s));
}

#[test]
fn adapted_2d_centroids_sit_inside_partition_cells() {
    let p = Partition::rectilinear(vec![0.3, 0.6], vec![0.4, 0.7], false).unwrap();
    let mesh = adapted_mesh_2d(&p, 0.2).unwrap();
    let m = mesh.as_2d();
    let (x_cuts, y_cuts) = p.cuts();
    for cell in 0..m.cell_count() {
        let c = m.centroid(cell);
        let owner = m.cell_to_partition[cell];
        let (i, j) = (owner % 3, owner / 3);
        assert!(x_cuts[i] < c[0] && c[0] < x_cuts[i + 1]);
        assert!(y_cuts[j] < c[1] && c[1] < y_cuts[j + 1]);
    }
}

#[test]
fn adapted_2d_respects_pitch_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = sample_partition_2d(Partition2dKind::Heterogeneous, &mut rng);
        let mesh = adapted_mesh_2d(&p, 0.1).unwrap();
        assert!(mesh.h() <= 0.1 + 1e-12);
        let m = mesh.as_2d();
        let area: f64 = (0..m.cell_count()).map(|c| m.triangle_area(c)).sum();
        assert!((area - 1.0).abs() < 1e-10, "area {area}");
    }
}

#[test]
fn degenerate_partition_lines_are_rejected() {
    let p = Partition::rectilinear(vec![0.5, 0.5 + 1e-12], vec![0.4], false).unwrap();
    match adapted_mesh_2d(&p, 0.1) {
        Err(Error::DegeneratePartition { .. }) => {}
        Err(other) => panic!("unexpected error {other}"),
        Ok(_) => panic!("expected degenerate-partition error"),
    }
}

#[test]
fn uniform_1d_counts() {
    let mesh = uniform_mesh(1, 0.25).unwrap();
    assert_eq!(mesh.cell_count(), 4);
    assert_eq!(mesh.vertex_count(), 5);
    // 1/h rounding does not overshoot
    assert_eq!(uniform_mesh(1, 0.1).unwrap().cell_count(), 10);
}

#[test]
fn uniform_2d_counts() {
    let mesh = uniform_mesh(2, 0.5).unwrap();
    assert_eq!(mesh.as_2d().triangles.len(), 8);
}

#[test]
fn uniform_mesh_straddles_jump() {
    let p = Partition::from_breaks(vec![0.0, 0.3, 1.0]).unwrap();
    let mut mesh = uniform_mesh(1, 0.25).unwrap();
    attach_partition(&mut mesh, &p).unwrap();
    let m = mesh.as_1d();
    assert_eq!(m.straddle, vec![false, true, false, false]);
    // centroid of (0.25, 0.5) is 0.375, already right of the jump
    assert_eq!(m.cell_to_partition, vec![0, 1, 1, 1]);
}

#[test]
fn equilateral_quality_is_two() {
    let q = triangle_quality([0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]).unwrap();
    assert!((q - 2.0).abs() < 1e-12, "quality {q}");
}

#[test]
fn right_isoceles_quality() {
    let mesh = uniform_mesh(2, 0.5).unwrap();
    let q = shape_regularity(&mesh).unwrap();
    assert!((q - (1.0 + 2f64.sqrt())).abs() < 1e-12, "quality {q}");
}

#[test]
fn degenerate_triangle_errors() {
    assert!(matches!(
        triangle_quality([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]),
        Err(Error::Geometry(_))
    ));
}

#[test]
fn adapted_meshes_stay_shape_regular() {
    // separated interfaces keep the aspect ratio at most 2, i.e. quality <= 3
    let p = Partition::rectilinear(vec![0.3, 0.6], vec![0.4, 0.7], false).unwrap();
    for h_bar in [0.2, 0.1, 0.05] {
        let mesh = adapted_mesh_2d(&p, h_bar).unwrap();
        let q = shape_regularity(&mesh).unwrap();
        assert!(q <= 3.0, "h_bar {h_bar}: quality {q}");
    }
}

#[test]
fn refinement_scales_cell_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p1 = sample_partition_1d(5.0, &mut rng).unwrap();
    let coarse = adapted_mesh_1d(&p1, 0.1).unwrap().cell_count() as f64;
    let fine = adapted_mesh_1d(&p1, 0.05).unwrap().cell_count() as f64;
    assert!(
        (fine / coarse - 2.0).abs() < 0.4,
        "1d ratio {}",
        fine / coarse
    );

    let p2 = sample_partition_2d(Partition2dKind::Heterogeneous, &mut rng);
    let coarse = adapted_mesh_2d(&p2, 0.1).unwrap().cell_count() as f64;
    let fine = adapted_mesh_2d(&p2, 0.05).unwrap().cell_count() as f64;
    assert!(
        (fine / coarse - 4.0).abs() < 0.8,
        "2d ratio {}",
        fine / coarse
    );
}

#[test]
fn euler_relation_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let p = sample_partition_2d(Partition2dKind::Heterogeneous, &mut rng);
    let mesh = adapted_mesh_2d(&p, 0.15).unwrap();
    let m = mesh.as_2d();
    let mut edges = std::collections::HashSet::new();
    for t in &m.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let v = m.vertices.len() as i64;
    let e = edges.len() as i64;
    let f = m.triangles.len() as i64;
    assert_eq!(v - e + f, 1);
}

#[test]
fn conformity_of_adapted_meshes() {
    // any two triangles meet in nothing, a shared vertex, or a shared edge
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let p = sample_partition_2d(Partition2dKind::Checkerboard, &mut rng);
    let mesh = adapted_mesh_2d(&p, 0.21).unwrap();
    let m = mesh.as_2d();
    // edge-to-triangle incidence: interior edges see exactly 2 triangles
    let mut incidence: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for t in &m.triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    for (&(a, b), &count) in &incidence {
        assert!(count <= 2, "edge ({a}, {b}) shared by {count} triangles");
        if count == 1 {
            // boundary edges only
            let (va, vb) = (m.vertices[a], m.vertices[b]);
            let on_boundary = (va[0] == vb[0] && (va[0] == 0.0 || va[0] == 1.0))
                || (va[1] == vb[1] && (va[1] == 0.0 || va[1] == 1.0));
            assert!(on_boundary, "dangling interior edge ({va:?}, {vb:?})");
        }
    }
}

#[test]
fn interfaces_are_unions_of_edges() {
    // exhaustive geometric check: each interface line is covered by mesh
    // edges lying on it, and no triangle crosses it
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for kind in [
        Partition2dKind::Heterogeneous,
        Partition2dKind::Checkerboard,
    ] {
        let p = sample_partition_2d(kind, &mut rng);
        let mesh = adapted_mesh_2d(&p, 0.13).unwrap();
        let m = mesh.as_2d();
        let (x_cuts, y_cuts) = p.cuts();
        let mut edges = std::collections::HashSet::new();
        for t in &m.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        for &line in &x_cuts[1..x_cuts.len() - 1] {
            // no triangle puts vertices strictly on both sides
            for t in &m.triangles {
                let xs = [
                    m.vertices[t[0]][0],
                    m.vertices[t[1]][0],
                    m.vertices[t[2]][0],
                ];
                let left = xs.iter().any(|&x| x < line - 1e-14);
                let right = xs.iter().any(|&x| x > line + 1e-14);
                assert!(!(left && right), "triangle crosses x = {line}");
            }
            // edges on the line cover (0, 1) in y
            let mut spans: Vec<(f64, f64)> = edges
                .iter()
                .filter(|&&(a, b)| m.vertices[a][0] == line && m.vertices[b][0] == line)
                .map(|&(a, b)| {
                    let (ya, yb) = (m.vertices[a][1], m.vertices[b][1]);
                    (ya.min(yb), ya.max(yb))
                })
                .collect();
            spans.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut reach = 0.0;
            for (lo, hi) in spans {
                assert!(lo <= reach + 1e-14, "gap in interface cover at x = {line}");
                reach = reach.max(hi);
            }
            assert!((reach - 1.0).abs() < 1e-14);
        }
        for &line in &y_cuts[1..y_cuts.len() - 1] {
            for t in &m.triangles {
                let ys = [
                    m.vertices[t[0]][1],
                    m.vertices[t[1]][1],
                    m.vertices[t[2]][1],
                ];
                let below = ys.iter().any(|&y| y < line - 1e-14);
                let above = ys.iter().any(|&y| y > line + 1e-14);
                assert!(!(below && above), "triangle crosses y = {line}");
            }
        }
    }
    // 1d: jump points are vertices
    let p = sample_partition_1d(5.0, &mut rng).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.07).unwrap();
    let m = mesh.as_1d();
    for jump in p.interior_breaks() {
        assert!(m.vertices.iter().any(|v| v == jump));
    }
}

#[test]
fn mesh_dump_roundtrips_basic_fields() {
    let p = Partition::from_breaks(vec![0.0, 0.5, 1.0]).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.5).unwrap();
    let mut buffer = Vec::new();
    mesh.dump_text(&mut buffer).unwrap();
    let text = String::from_utf8(buffer).unwrap();
    assert!(text.starts_with("dim 1\nvertices 3\n"));
    assert!(text.contains("cells 2"));
}
