use super::*;
use crate::jump_model::{
    compose_coefficients, CoefficientPair, JumpHeights, Partition, PhiMap, ScalarField, VectorField,
};
use crate::mesh::{adapted_mesh_1d, uniform_mesh};
use crate::random_field::{closed_form_spectrum, CovarianceSpec, FieldRealization};
use crate::Point;
use std::f64::consts::PI;
use std::sync::Arc;

fn zero_field() -> FieldRealization {
    let basis = Arc::new(closed_form_spectrum(&CovarianceSpec::Brownian, 1).unwrap());
    FieldRealization::from_coordinates(&basis, vec![0.0])
}

fn trivial_partition(dim: usize) -> Arc<Partition> {
    Arc::new(match dim {
        1 => Partition::from_breaks(vec![0.0, 1.0]).unwrap(),
        _ => Partition::rectilinear(vec![], vec![], false).unwrap(),
    })
}

fn no_heights(tau: usize) -> JumpHeights {
    JumpHeights {
        values: vec![0.0; tau],
        bias_budget: 0.0,
        cap: f64::INFINITY,
    }
}

/// a = exp(0) = 1, b = 0
fn unit_coefficient(dim: usize) -> CoefficientPair {
    compose_coefficients(
        &zero_field(),
        trivial_partition(dim),
        &no_heights(1),
        None,
        PhiMap::Exp,
        None,
        None,
    )
    .unwrap()
}

/// a from a closure (pure trend, field off), optional advection profile
fn coefficient_from(
    dim: usize,
    a: impl Fn(Point) -> f64 + Send + Sync + 'static,
    b: Option<VectorField>,
) -> CoefficientPair {
    let a_bar: ScalarField = Arc::new(a);
    compose_coefficients(
        &zero_field(),
        trivial_partition(dim),
        &no_heights(1),
        Some(a_bar),
        PhiMap::Zero,
        b,
        None,
    )
    .unwrap()
}

/// dense LU with partial pivoting, the oracle for small solves
fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            x[i] -= m[i][j] * x[j];
        }
        x[i] /= m[i][i];
    }
    x
}

fn dense_cholesky_ok(m: &CsrMatrix) -> bool {
    let n = m.n;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            a[i][j] = v;
        }
    }
    for k in 0..n {
        for j in 0..k {
            a[k][k] -= a[k][j] * a[k][j];
        }
        if a[k][k] <= 0.0 {
            return false;
        }
        a[k][k] = a[k][k].sqrt();
        for i in k + 1..n {
            for j in 0..k {
                a[i][k] -= a[i][j] * a[k][j];
            }
            a[i][k] /= a[k][k];
        }
    }
    true
}

#[test]
fn uniform_1d_stencils() {
    let mesh = uniform_mesh(1, 0.25).unwrap();
    let coeff = unit_coefficient(1);
    let sys = assemble(&mesh, &coeff).unwrap();
    assert_eq!(sys.dofs(), 3);
    let h = 0.25;
    for i in 0..3 {
        assert!((sys.stiffness.get(i, i) - 2.0 / h).abs() < 1e-12);
        assert!((sys.mass.get(i, i) - 2.0 * h / 3.0).abs() < 1e-15);
        if i > 0 {
            assert!((sys.stiffness.get(i, i - 1) + 1.0 / h).abs() < 1e-12);
            assert!((sys.mass.get(i, i - 1) - h / 6.0).abs() < 1e-15);
        }
    }
}

#[test]
fn stiffness_scales_linearly_in_a() {
    let mesh = uniform_mesh(1, 0.125).unwrap();
    let sys_one = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let c = 3.7;
    let sys_c = assemble(&mesh, &coefficient_from(1, move |_| c, None)).unwrap();
    for (v1, vc) in sys_one.stiffness.values.iter().zip(&sys_c.stiffness.values) {
        assert!((vc - c * v1).abs() < 1e-12 * vc.abs().max(1.0));
    }
}

#[test]
fn laplacian_2d_is_symmetric_and_annihilates_constants() {
    let mesh = uniform_mesh(2, 0.25).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(2)).unwrap();
    let a = &sys.stiffness;
    assert_eq!(sys.dofs(), 9);
    for i in 0..a.n {
        let (cols, _) = a.row(i);
        for &j in cols {
            assert!((a.get(i, j) - a.get(j, i)).abs() < 1e-13);
        }
    }
    // rows whose stencil stays away from the boundary sum to zero
    let m2 = mesh.as_2d();
    for dof in 0..sys.dofs() {
        let v = sys.vertex_of_dof[dof];
        let cols = m2.grid_x.len();
        let (i, j) = (v % cols, v / cols);
        if i >= 2 && i + 2 < cols && j >= 2 && j + 2 < m2.grid_y.len() {
            let (_, vals) = a.row(dof);
            let sum: f64 = vals.iter().sum();
            assert!(sum.abs() < 1e-12, "interior row sum {sum}");
        }
    }
}

#[test]
fn load_vector_midpoint_rule() {
    let mesh = uniform_mesh(1, 0.25).unwrap();
    let coeff = unit_coefficient(1);
    let sys = assemble(&mesh, &coeff).unwrap();
    let zero = assemble_load(&mesh, &sys, &|_, _| 0.0, 0.0);
    assert!(zero.iter().all(|&v| v == 0.0));
    let ones = assemble_load(&mesh, &sys, &|_, _| 1.0, 0.0);
    // interior entries are h; the free total is 1 - h (partition of unity
    // minus the two boundary hats, each holding h/2)
    for &v in &ones {
        assert!((v - 0.25).abs() < 1e-15);
    }
    let total: f64 = ones.iter().sum();
    assert!((total - 0.75).abs() < 1e-14);
}

#[test]
fn nodal_interpolation_reproduces_p1_functions() {
    let p = Partition::from_breaks(vec![0.0, 0.37, 1.0]).unwrap();
    let mesh = adapted_mesh_1d(&p, 0.2).unwrap();
    let coeff = compose_coefficients(
        &zero_field(),
        Arc::new(Partition::from_breaks(vec![0.0, 0.37, 1.0]).unwrap()),
        &no_heights(2),
        None,
        PhiMap::Exp,
        None,
        None,
    )
    .unwrap();
    let sys = assemble(&mesh, &coeff).unwrap();
    // a function that is already P1 on this very mesh (kinks only at mesh
    // vertices, zero on the boundary): interpolation reproduces it exactly
    let vertices = mesh.as_1d().vertices.clone();
    let nodal: Vec<f64> = (0..vertices.len())
        .map(|v| {
            if v == 0 || v == vertices.len() - 1 {
                0.0
            } else {
                (3.0 * v as f64).sin()
            }
        })
        .collect();
    let g = {
        let vertices = vertices.clone();
        let nodal = nodal.clone();
        move |p: Point| -> f64 {
            let idx = vertices
                .partition_point(|&v| v < p[0])
                .clamp(1, vertices.len() - 1);
            let (x0, x1) = (vertices[idx - 1], vertices[idx]);
            let theta = (p[0] - x0) / (x1 - x0);
            nodal[idx - 1] * (1.0 - theta) + nodal[idx] * theta
        }
    };
    let coeffs = nodal_interpolate(&mesh, &sys, &g);
    for (dof, &v) in sys.vertex_of_dof.iter().enumerate() {
        assert!((coeffs[dof] - nodal[v]).abs() < 1e-14);
    }
    let lattice = Lattice::new(1, 1025);
    let traj = Trajectory {
        times: vec![0.0],
        states: vec![coeffs],
    };
    let values = evaluate_on_grid(&mesh, &sys, &traj, 0.0, &lattice).unwrap();
    for k in 0..lattice.point_count() {
        let x = lattice.coordinate(k);
        assert!(
            (values[k] - g([x, 0.0])).abs() < 1e-12,
            "x = {x}: {} vs {}",
            values[k],
            g([x, 0.0])
        );
    }
    // spec spot value: sin(pi x) / 10 at the vertex 0.5
    let mesh = uniform_mesh(1, 0.25).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let u0 = nodal_interpolate(&mesh, &sys, &|p: Point| (PI * p[0]).sin() / 10.0);
    assert!((u0[1] - 0.1).abs() < 1e-15);
}

#[test]
fn interpolation_error_decays_first_order_in_h1() {
    let g = |p: Point| (2.0 * PI * p[0]).sin() * 0.3 + p[0] * (1.0 - p[0]);
    let lattice = Lattice::new(1, 2049);
    let exact: Vec<f64> = (0..lattice.point_count())
        .map(|k| g([lattice.coordinate(k), 0.0]))
        .collect();
    let mut errors = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let mesh = uniform_mesh(1, 1.0 / n as f64).unwrap();
        let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
        let coeffs = nodal_interpolate(&mesh, &sys, &g);
        let traj = Trajectory {
            times: vec![0.0],
            states: vec![coeffs],
        };
        let values = evaluate_on_grid(&mesh, &sys, &traj, 0.0, &lattice).unwrap();
        let diff: Vec<f64> = values.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errors.push(grid_norm(&lattice, &diff, GridNorm::H1));
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 0.8 && order < 1.6, "order {order}");
    }
}

#[test]
fn scalar_backward_euler_recursion() {
    // M = 1, A = lambda: c_i = (1 + dt lambda)^{-i}
    let mut mass = CsrMatrix::from_pattern(&[vec![0]]);
    mass.add(0, 0, 1.0);
    let mut stiffness = CsrMatrix::from_pattern(&[vec![0]]);
    let lambda = 2.5;
    stiffness.add(0, 0, lambda);
    let sys = SparseSystem {
        mass,
        stiffness,
        dof_of_vertex: vec![Some(0)],
        vertex_of_dof: vec![0],
    };
    let dt = 0.125;
    let traj = backward_euler(
        &sys,
        &|_| vec![0.0],
        vec![1.0],
        dt,
        1.0,
        SolverKind::Direct,
        StoreMode::Full,
    )
    .unwrap();
    for (i, state) in traj.states.iter().enumerate() {
        let expected = (1.0 + dt * lambda).powi(-(i as i32));
        assert!((state[0] - expected).abs() < 1e-13, "step {i}");
    }
}

#[test]
fn unforced_energy_never_grows() {
    let mesh = uniform_mesh(1, 0.1).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let u0 = nodal_interpolate(&mesh, &sys, &|p: Point| p[0] * (1.0 - p[0]));
    for dt in [1.0, 0.1, 0.01] {
        let traj = backward_euler(
            &sys,
            &|_| vec![0.0; sys.dofs()],
            u0.clone(),
            dt,
            dt * 5.0,
            SolverKind::Direct,
            StoreMode::Full,
        )
        .unwrap();
        let norms: Vec<f64> = traj.states.iter().map(|s| sys.mass_norm(s)).collect();
        assert!(
            norms.windows(2).all(|w| w[1] <= w[0] + 1e-14),
            "dt {dt}: norms {norms:?}"
        );
    }
}

#[test]
fn dt_must_divide_horizon() {
    let mesh = uniform_mesh(1, 0.5).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let bad = backward_euler(
        &sys,
        &|_| vec![0.0; sys.dofs()],
        vec![0.0; sys.dofs()],
        0.3,
        1.0,
        SolverKind::Direct,
        StoreMode::Full,
    );
    assert!(matches!(bad, Err(crate::Error::Config { .. })));
}

#[test]
fn manufactured_solution_converges_in_h1() {
    // u = sin(pi x) e^{-t}, a = 1, b = 0, f = (pi^2 - 1) sin(pi x) e^{-t}
    let lattice = Lattice::new(1, 1025);
    let exact_at = |t: f64| -> Vec<f64> {
        (0..lattice.point_count())
            .map(|k| (PI * lattice.coordinate(k)).sin() * (-t).exp())
            .collect()
    };
    let mut errors = Vec::new();
    let sizes = [8usize, 16, 32, 64];
    for &n in &sizes {
        let h = 1.0 / n as f64;
        let mesh = uniform_mesh(1, h).unwrap();
        let coeff = unit_coefficient(1);
        let sys = assemble(&mesh, &coeff).unwrap();
        let u0 = nodal_interpolate(&mesh, &sys, &|p: Point| (PI * p[0]).sin());
        let load = |t: f64| {
            assemble_load(
                &mesh,
                &sys,
                &|p, tt| (PI * PI - 1.0) * (PI * p[0]).sin() * (-tt).exp(),
                t,
            )
        };
        let traj =
            backward_euler(&sys, &load, u0, h, 1.0, SolverKind::Direct, StoreMode::Ends).unwrap();
        let values = evaluate_on_grid(&mesh, &sys, &traj, 1.0, &lattice).unwrap();
        let exact = exact_at(1.0);
        let diff: Vec<f64> = values.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errors.push(grid_norm(&lattice, &diff, GridNorm::H1));
    }
    let slope = fit_slope(
        &sizes.map(|n| (1.0 / n as f64).ln()),
        &errors.iter().map(|e| e.ln()).collect::<Vec<_>>(),
    );
    assert!(
        (slope - 1.0).abs() < 0.25,
        "joint h1 order {slope}, errors {errors:?}"
    );
}

#[test]
fn manufactured_solution_2d_spatial_order() {
    // u = sin(pi x) sin(pi y) e^{-t}, f = (2 pi^2 - 1) u
    let lattice = Lattice::new(2, 129);
    let mut errors = Vec::new();
    let sizes = [4usize, 8, 16];
    for &n in &sizes {
        let h = 1.0 / n as f64;
        let mesh = uniform_mesh(2, h).unwrap();
        let coeff = unit_coefficient(2);
        let sys = assemble(&mesh, &coeff).unwrap();
        let u0 = nodal_interpolate(&mesh, &sys, &|p: Point| {
            (PI * p[0]).sin() * (PI * p[1]).sin()
        });
        let load = |t: f64| {
            assemble_load(
                &mesh,
                &sys,
                &|p, tt| {
                    (2.0 * PI * PI - 1.0) * (PI * p[0]).sin() * (PI * p[1]).sin() * (-tt).exp()
                },
                t,
            )
        };
        let dt = h / 8.0;
        let traj = backward_euler(
            &sys,
            &load,
            u0,
            dt,
            1.0,
            SolverKind::Direct,
            StoreMode::Ends,
        )
        .unwrap();
        let values = evaluate_on_grid(&mesh, &sys, &traj, 1.0, &lattice).unwrap();
        let n_pts = lattice.point_count();
        let exact: Vec<f64> = (0..n_pts)
            .map(|k| {
                let p = lattice_point(&lattice, k);
                (PI * p[0]).sin() * (PI * p[1]).sin() * (-1.0f64).exp()
            })
            .collect();
        let diff: Vec<f64> = values.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errors.push(grid_norm(&lattice, &diff, GridNorm::H1));
    }
    let slope = fit_slope(
        &sizes.map(|n| (1.0 / n as f64).ln()),
        &errors.iter().map(|e| e.ln()).collect::<Vec<_>>(),
    );
    assert!((slope - 1.0).abs() < 0.3, "2d h1 order {slope}");
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

#[test]
fn solve_linear_identity_and_hand_solved_poisson() {
    let mut eye = CsrMatrix::from_pattern(&[vec![0], vec![1], vec![2]]);
    for i in 0..3 {
        eye.add(i, i, 1.0);
    }
    let x = solve_linear(&eye, &[4.0, -1.0, 2.5]).unwrap();
    assert_eq!(x, vec![4.0, -1.0, 2.5]);

    // tridiag(-1, 2, -1) x = (1, 0, 0): x = (3/4, 1/2, 1/4) by elimination
    let mut a = CsrMatrix::from_pattern(&[vec![0, 1], vec![0, 1, 2], vec![1, 2]]);
    a.add(0, 0, 2.0);
    a.add(0, 1, -1.0);
    a.add(1, 0, -1.0);
    a.add(1, 1, 2.0);
    a.add(1, 2, -1.0);
    a.add(2, 1, -1.0);
    a.add(2, 2, 2.0);
    let x = solve_linear(&a, &[1.0, 0.0, 0.0]).unwrap();
    assert!((x[0] - 0.75).abs() < 1e-12);
    assert!((x[1] - 0.5).abs() < 1e-12);
    assert!((x[2] - 0.25).abs() < 1e-12);
}

#[test]
fn direct_solvers_match_dense_oracle() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for trial in 0..10 {
        let n = 20 + 3 * trial;
        let bw = 2 + trial % 3;
        let mut dense = vec![vec![0.0; n]; n];
        let mut pattern: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw + 1).min(n);
            pattern.push((lo..hi).collect());
        }
        let mut csr = CsrMatrix::from_pattern(&pattern);
        for i in 0..n {
            for j in pattern[i].clone() {
                // diagonally dominant nonsymmetric band, advection-like
                let v = if i == j {
                    4.0 + rng.random::<f64>()
                } else {
                    rng.random::<f64>() - 0.3
                };
                dense[i][j] = v;
                csr.add(i, j, v);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let oracle = dense_solve(&dense, &rhs);
        // banded path
        let banded = BandedLu::factor(&csr).unwrap().solve(&rhs);
        // sparse LU path
        let sparse = SparseDirect::factor(&csr).unwrap().solve(&rhs);
        // iterative path
        let iterative = BiCgStab::new(&csr).unwrap().solve(&rhs).unwrap();
        for i in 0..n {
            assert!((banded[i] - oracle[i]).abs() < 1e-10, "banded row {i}");
            assert!((sparse[i] - oracle[i]).abs() < 1e-10, "sparse row {i}");
            assert!((iterative[i] - oracle[i]).abs() < 1e-8, "bicgstab row {i}");
        }
    }
}

#[test]
fn bicgstab_solves_the_advection_system() {
    // assembled nonsymmetric system: both solver kinds agree
    let mesh = uniform_mesh(1, 0.05).unwrap();
    let b1: VectorField = Arc::new(|p: Point| [2.0 * (2.0 * PI * p[0]).sin(), 0.0]);
    let coeff = coefficient_from(1, |_| 1.0, Some(b1));
    let sys = assemble(&mesh, &coeff).unwrap();
    let matrix = sys.mass.add_scaled(&sys.stiffness, 0.05);
    let rhs = assemble_load(&mesh, &sys, &|_, _| 1.0, 0.0);
    let direct = Factorization::new(&matrix, SolverKind::Direct)
        .unwrap()
        .solve(&rhs)
        .unwrap();
    let krylov = Factorization::new(&matrix, SolverKind::Bicgstab)
        .unwrap()
        .solve(&rhs)
        .unwrap();
    for (d, k) in direct.iter().zip(&krylov) {
        assert!((d - k).abs() < 1e-8);
    }
}

#[test]
fn grid_evaluation_reproduces_states_and_interpolates_time() {
    let mesh = uniform_mesh(1, 0.25).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let traj = Trajectory {
        times: vec![0.0, 1.0],
        states: vec![vec![1.0, 2.0, -1.0], vec![3.0, 0.0, 1.0]],
    };
    let lattice = Lattice::new(1, 5);
    let at0 = evaluate_on_grid(&mesh, &sys, &traj, 0.0, &lattice).unwrap();
    assert_eq!(at0, vec![0.0, 1.0, 2.0, -1.0, 0.0]);
    let at1 = evaluate_on_grid(&mesh, &sys, &traj, 1.0, &lattice).unwrap();
    assert_eq!(at1, vec![0.0, 3.0, 0.0, 1.0, 0.0]);
    let mid = evaluate_on_grid(&mesh, &sys, &traj, 0.5, &lattice).unwrap();
    for k in 0..5 {
        assert!((mid[k] - 0.5 * (at0[k] + at1[k])).abs() < 1e-15);
    }
    assert!(evaluate_on_grid(&mesh, &sys, &traj, 2.0, &lattice).is_err());
}

#[test]
fn lattice_norms_against_closed_forms() {
    let lattice = Lattice::new(1, 1025);
    let ones = vec![1.0; 1025];
    assert!((grid_norm(&lattice, &ones, GridNorm::L2) - 1.0).abs() < 1e-14);
    let zeros = vec![0.0; 1025];
    assert_eq!(grid_norm(&lattice, &zeros, GridNorm::H1), 0.0);
    let sine: Vec<f64> = (0..1025)
        .map(|k| (PI * lattice.coordinate(k)).sin())
        .collect();
    let semi = grid_norm(&lattice, &sine, GridNorm::H1Semi);
    assert!(
        (semi - PI / 2f64.sqrt()).abs() < 1e-3,
        "seminorm {semi} vs {}",
        PI / 2f64.sqrt()
    );
    // 2d: k(x, y) = x constant in y has seminorm 1
    let lat2 = Lattice::new(2, 65);
    let plane: Vec<f64> = (0..lat2.point_count())
        .map(|k| lattice_point(&lat2, k)[0])
        .collect();
    assert!((grid_norm(&lat2, &plane, GridNorm::H1Semi) - 1.0).abs() < 1e-12);
}

#[test]
fn prolongation_of_dyadic_p1_function_is_norm_exact() {
    // mesh vertices on the dyadic lattice: prolongation introduces no error
    let mesh = uniform_mesh(1, 0.125).unwrap();
    let sys = assemble(&mesh, &unit_coefficient(1)).unwrap();
    let coeffs: Vec<f64> = (0..sys.dofs())
        .map(|i| ((i * 37) % 5) as f64 - 2.0)
        .collect();
    let traj = Trajectory {
        times: vec![0.0],
        states: vec![coeffs.clone()],
    };
    let lattice = Lattice::new(1, 1025);
    let values = evaluate_on_grid(&mesh, &sys, &traj, 0.0, &lattice).unwrap();
    // exact H1 seminorm of the P1 function from its slopes
    let mut vertex_values = vec![0.0; 9];
    for (dof, &v) in sys.vertex_of_dof.iter().enumerate() {
        vertex_values[v] = coeffs[dof];
    }
    let mut exact_sq = 0.0;
    for k in 0..8 {
        let slope = (vertex_values[k + 1] - vertex_values[k]) / 0.125;
        exact_sq += slope * slope * 0.125;
    }
    let semi = grid_norm(&lattice, &values, GridNorm::H1Semi);
    assert!((semi * semi - exact_sq).abs() < 1e-10);
}

#[test]
fn parabolic_norm_combines_sup_and_time_integral() {
    let lattice = Lattice::new(1, 3);
    // two snapshots: constant 1 (no gradient), then the tent (gradient 2, -2)
    let flat = vec![1.0, 1.0, 1.0];
    let tent = vec![0.0, 1.0, 0.0];
    let value = parabolic_sup_norm(&lattice, &[0.0, 1.0], &[flat.clone(), tent.clone()]);
    let l2_tent_sq = grid_norm(&lattice, &tent, GridNorm::L2).powi(2);
    let semi_tent_sq = grid_norm(&lattice, &tent, GridNorm::H1Semi).powi(2);
    let expected = (l2_tent_sq + 0.5 * semi_tent_sq).max(1.0).sqrt();
    assert!((value - expected).abs() < 1e-14);
    assert_eq!(
        parabolic_sup_norm(&lattice, &[0.0], &[vec![0.0, 0.0, 0.0]]),
        0.0
    );
}

#[test]
fn midpoint_assembly_converges_to_exact_integration() {
    // smooth coefficient: the one-point rule drifts from exact integration
    // at first order in h (per-entry, the entries scale like 1/h)
    let a_smooth = |p: Point| 2.0 + (2.0 * PI * p[0]).sin();
    let mut worst = Vec::new();
    let sizes = [10usize, 20, 40];
    for &n in &sizes {
        let h = 1.0 / n as f64;
        let mesh = uniform_mesh(1, h).unwrap();
        let coeff = coefficient_from(1, a_smooth, None);
        let sys = assemble(&mesh, &coeff).unwrap();
        // gauss-5 oracle per cell
        let gauss_x = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let gauss_w = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        let m = mesh.as_1d();
        let mut max_diff: f64 = 0.0;
        for cell in 0..m.cell_count() {
            let (x0, x1) = m.cell_bounds(cell);
            let mid = 0.5 * (x0 + x1);
            let half = 0.5 * (x1 - x0);
            let exact_int: f64 = gauss_x
                .iter()
                .zip(&gauss_w)
                .map(|(&x, &w)| w * a_smooth([mid + half * x, 0.0]) * half)
                .sum();
            for (vi, vj) in [(cell, cell + 1), (cell, cell), (cell + 1, cell + 1)] {
                let (Some(i), Some(j)) = (sys.dof_of_vertex[vi], sys.dof_of_vertex[vj]) else {
                    continue;
                };
                let grad = 1.0 / (x1 - x0);
                let sign = if vi == vj { 1.0 } else { -1.0 };
                let exact_entry = sign * grad * grad * exact_int;
                // isolate this cell's contribution from the assembled matrix
                let assembled_entry = sign * grad * a_smooth([mid, 0.0]);
                let _ = (i, j);
                max_diff = max_diff.max((assembled_entry - exact_entry).abs());
            }
        }
        worst.push(max_diff);
    }
    let slope = fit_slope(
        &sizes.map(|n| (1.0 / n as f64).ln()),
        &worst.iter().map(|e| e.ln()).collect::<Vec<_>>(),
    );
    assert!(
        slope > 0.9,
        "quadrature drift order {slope}, diffs {worst:?}"
    );
}

#[test]
fn mass_and_diffusion_matrices_are_positive_definite() {
    for mesh in [
        uniform_mesh(1, 0.2).unwrap(),
        uniform_mesh(2, 0.25).unwrap(),
    ] {
        let dim = mesh.dim();
        let sys = assemble(&mesh, &unit_coefficient(dim)).unwrap();
        assert!(dense_cholesky_ok(&sys.mass), "mass SPD failed in {dim}d");
        assert!(
            dense_cholesky_ok(&sys.stiffness),
            "diffusion SPD failed in {dim}d"
        );
    }
}

#[test]
fn nonpositive_coefficient_is_rejected() {
    let mesh = uniform_mesh(1, 0.5).unwrap();
    let coeff = coefficient_from(1, |p| p[0] - 0.3, None); // negative at x=0.25
    assert!(matches!(
        assemble(&mesh, &coeff),
        Err(crate::Error::CoefficientInvalid { .. })
    ));
}
