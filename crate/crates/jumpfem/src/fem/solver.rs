//! Direct and iterative linear solvers behind one interface.
//!
//! 1D systems are banded (tridiagonal plus advection) and go through a
//! hand-rolled banded LU with partial pivoting. 2D systems use a sparse LU
//! with fill-reducing ordering. A diagonally preconditioned BiCGSTAB is
//! available behind a configuration switch.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Relative residual accepted from a linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Solver selection: direct sparse elimination, or stabilized bi-conjugate
/// gradients with diagonal preconditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Direct,
    Bicgstab,
}

/// Pin all linear algebra to sequential execution. Samples parallelize over
/// seeds instead, which keeps reductions bitwise reproducible for any thread
/// count.
pub fn set_deterministic_parallelism() {
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Banded LU with partial pivoting; band storage with `bw` sub- and
/// super-diagonals plus `bw` fill columns.
pub struct BandedLu {
    n: usize,
    bw: usize,
    /// upper factor, rows of width 2 bw + 1
    upper: Vec<f64>,
    /// multipliers
    lower: Vec<f64>,
    pivot: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.n;
        let bw = matrix.bandwidth().max(1);
        let m = 2 * bw + 1;
        // compact rows: a[i][k] holds A[i][i - bw + k]
        let mut a = vec![0.0; n * m];
        for i in 0..n {
            let (cols, vals) = matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a[i * m + (j + bw - i)] = v;
            }
        }
        // shift the skewed top rows left
        let mut l = bw;
        for i in 0..bw.min(n) {
            for j in (bw - i)..m {
                a[i * m + j - l] = a[i * m + j];
            }
            l -= 1;
            for j in (m - l - 1)..m {
                a[i * m + j] = 0.0;
            }
        }
        let mut lower = vec![0.0; n * bw];
        let mut pivot = vec![0usize; n];
        let mut l = bw;
        for k in 0..n {
            let mut dum = a[k * m];
            let mut ipiv = k;
            if l < n {
                l += 1;
            }
            for j in k + 1..l {
                if a[j * m].abs() > dum.abs() {
                    dum = a[j * m];
                    ipiv = j;
                }
            }
            pivot[k] = ipiv;
            if dum == 0.0 {
                return Err(Error::Solver {
                    step: 0,
                    message: format!("banded factorization hit a zero pivot at column {k}"),
                });
            }
            if ipiv != k {
                for j in 0..m {
                    a.swap(k * m + j, ipiv * m + j);
                }
            }
            for i in k + 1..l {
                let factor = a[i * m] / a[k * m];
                lower[k * bw + (i - k - 1)] = factor;
                for j in 1..m {
                    a[i * m + j - 1] = a[i * m + j] - factor * a[k * m + j];
                }
                a[i * m + m - 1] = 0.0;
            }
        }
        Ok(BandedLu {
            n,
            bw,
            upper: a,
            lower,
            pivot,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let m = 2 * bw + 1;
        let mut x = rhs.to_vec();
        let mut l = bw;
        for k in 0..n {
            let p = self.pivot[k];
            if p != k {
                x.swap(k, p);
            }
            if l < n {
                l += 1;
            }
            for i in k + 1..l {
                x[i] -= self.lower[k * bw + (i - k - 1)] * x[k];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut dum = x[i];
            for k in 1..l {
                dum -= self.upper[i * m + k] * x[i + k];
            }
            x[i] = dum / self.upper[i * m];
            if l < m {
                l += 1;
            }
        }
        x
    }
}

/// Sparse LU via faer with its default fill-reducing column ordering.
pub struct SparseDirect {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparseDirect {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.n;
        let mut triplets = Vec::with_capacity(matrix.nnz());
        for i in 0..n {
            let (cols, vals) = matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                triplets.push(Triplet::new(i, j, v));
            }
        }
        let mat =
            SparseColMat::try_new_from_triplets(n, n, &triplets).map_err(|e| Error::Solver {
                step: 0,
                message: format!("sparse matrix build failed: {e:?}"),
            })?;
        let symbolic = SymbolicLu::try_new(mat.symbolic()).map_err(|e| Error::Solver {
            step: 0,
            message: format!("symbolic factorization failed: {e:?}"),
        })?;
        let lu = Lu::try_new_with_symbolic(symbolic, mat.rb()).map_err(|e| Error::Solver {
            step: 0,
            message: format!("numeric factorization failed: {e:?}"),
        })?;
        Ok(SparseDirect { lu, n })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut col = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(col.as_mut());
        (0..self.n).map(|i| col[(i, 0)]).collect()
    }
}

/// Diagonally preconditioned BiCGSTAB.
pub struct BiCgStab {
    matrix: CsrMatrix,
    diag_inv: Vec<f64>,
}

impl BiCgStab {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let diag_inv = (0..matrix.n)
            .map(|i| {
                let d = matrix.get(i, i);
                if d == 0.0 {
                    Err(Error::Solver {
                        step: 0,
                        message: format!("zero diagonal at row {i}"),
                    })
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(BiCgStab {
            matrix: matrix.clone(),
            diag_inv,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.n;
        let norm_b = norm(rhs);
        if norm_b == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let tol = RESIDUAL_TOLERANCE * 0.1 * norm_b;
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut t = vec![0.0; n];
        let max_iter = 20 * n + 200;
        for _ in 0..max_iter {
            let rho_next = dot(&r0, &r);
            if rho_next.abs() < 1e-300 {
                break;
            }
            let beta = (rho_next / rho) * (alpha / omega);
            rho = rho_next;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let p_hat: Vec<f64> = (0..n).map(|i| p[i] * self.diag_inv[i]).collect();
            self.matrix.matvec(&p_hat, &mut v);
            alpha = rho / dot(&r0, &v);
            let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
            if norm(&s) < tol {
                for i in 0..n {
                    x[i] += alpha * p_hat[i];
                }
                return Ok(x);
            }
            let s_hat: Vec<f64> = (0..n).map(|i| s[i] * self.diag_inv[i]).collect();
            self.matrix.matvec(&s_hat, &mut t);
            omega = dot(&t, &s) / dot(&t, &t);
            for i in 0..n {
                x[i] += alpha * p_hat[i] + omega * s_hat[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) < tol {
                return Ok(x);
            }
        }
        Err(Error::Solver {
            step: 0,
            message: "bicgstab failed to converge".into(),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Banded elimination pays off only for narrow bands; everything else goes to
/// the sparse LU.
const BANDED_LIMIT: usize = 16;

pub enum Factorization {
    Banded(BandedLu),
    Sparse(SparseDirect),
    Iterative(BiCgStab),
}

impl Factorization {
    pub fn new(matrix: &CsrMatrix, kind: SolverKind) -> Result<Self> {
        match kind {
            SolverKind::Bicgstab => Ok(Factorization::Iterative(BiCgStab::new(matrix)?)),
            SolverKind::Direct => {
                if matrix.bandwidth() <= BANDED_LIMIT {
                    Ok(Factorization::Banded(BandedLu::factor(matrix)?))
                } else {
                    Ok(Factorization::Sparse(SparseDirect::factor(matrix)?))
                }
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factorization::Banded(f) => Ok(f.solve(rhs)),
            Factorization::Sparse(f) => Ok(f.solve(rhs)),
            Factorization::Iterative(f) => f.solve(rhs),
        }
    }
}

/// One-shot direct solve with a certified residual: factors, solves, applies
/// one refinement pass if needed and errors when the relative residual stays
/// above [`RESIDUAL_TOLERANCE`].
pub fn solve_linear(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let factorization = Factorization::new(matrix, SolverKind::Direct)?;
    let mut x = factorization.solve(rhs)?;
    let norm_b = norm(rhs).max(f64::MIN_POSITIVE);
    let mut residual = vec![0.0; matrix.n];
    matrix.matvec(&x, &mut residual);
    for (r, b) in residual.iter_mut().zip(rhs) {
        *r = b - *r;
    }
    if norm(&residual) > RESIDUAL_TOLERANCE * norm_b {
        let correction = factorization.solve(&residual)?;
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        matrix.matvec(&x, &mut residual);
        for (r, b) in residual.iter_mut().zip(rhs) {
            *r = b - *r;
        }
        if norm(&residual) > RESIDUAL_TOLERANCE * norm_b {
            return Err(Error::Solver {
                step: 0,
                message: format!(
                    "residual {:.3e} above tolerance after refinement",
                    norm(&residual) / norm_b
                ),
            });
        }
    }
    Ok(x)
}
