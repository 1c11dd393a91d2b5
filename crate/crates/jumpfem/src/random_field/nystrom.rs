//! Nystrom discretization of the Matern covariance operator on (0, 1).
//!
//! The integral operator is collocated at `m` composite-midpoint nodes with
//! equal weights 1/m, which keeps the scaled kernel matrix symmetric. The
//! symmetric eigenproblem is handled by a dense self-adjoint EVD; eigenvectors
//! are turned into L2(0,1)-normalized eigenfunctions by the usual Nystrom
//! extension
//!
//! ```text
//! e_i(x) = 1/(eta_i sqrt(m)) sum_k k(x, y_k) v_{i,k}.
//! ```

use faer::{Mat, Side};

use super::kernel::MaternKernel;
use crate::{Error, Result};

pub struct NystromSpectrum {
    pub nodes: Vec<f64>,
    /// eigenvalues, nonincreasing, tiny negatives clipped to zero
    pub eigenvalues: Vec<f64>,
    /// row i holds the extension coefficients of mode i against the nodes
    pub coeffs: Vec<f64>,
    pub kernel: MaternKernel,
}

/// Eigenvalues below this magnitude are treated as exact zeros.
const CLIP: f64 = 1e-12;
/// Anything more negative than this signals a failed eigensolve.
const NEGATIVE_TOLERANCE: f64 = -1e-10;

pub fn decompose(kernel: MaternKernel, m: usize, n: usize) -> Result<NystromSpectrum> {
    if m < n || n == 0 {
        return Err(Error::InsufficientResolution { m, n });
    }
    let nodes: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
    let scale = 1.0 / m as f64;
    let mut matrix = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let value = scale * kernel.eval(nodes[i] - nodes[j]);
            matrix[(i, j)] = value;
            matrix[(j, i)] = value;
        }
    }

    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolve(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut coeffs = vec![0.0; n * m];
    let sqrt_m = (m as f64).sqrt();
    for (mode, &col) in order.iter().take(n).enumerate() {
        let mut eta = s[col];
        if eta < NEGATIVE_TOLERANCE {
            return Err(Error::EigenSolve(format!(
                "eigenvalue {eta} of the kernel matrix is negative beyond tolerance"
            )));
        }
        if eta < CLIP {
            eta = 0.0;
        }
        eigenvalues.push(eta);
        if eta > 0.0 {
            // canonical sign: largest-magnitude component positive
            let mut pivot = 0;
            for k in 1..m {
                if u[(k, col)].abs() > u[(pivot, col)].abs() {
                    pivot = k;
                }
            }
            let sign = if u[(pivot, col)] < 0.0 { -1.0 } else { 1.0 };
            let factor = sign / (eta * sqrt_m);
            for k in 0..m {
                coeffs[mode * m + k] = u[(k, col)] * factor;
            }
        }
    }

    Ok(NystromSpectrum {
        nodes,
        eigenvalues,
        coeffs,
        kernel,
    })
}

impl NystromSpectrum {
    pub fn mode_value(&self, mode: usize, x: f64) -> f64 {
        let m = self.nodes.len();
        let row = &self.coeffs[mode * m..(mode + 1) * m];
        row.iter()
            .zip(&self.nodes)
            .map(|(c, y)| c * self.kernel.eval(x - y))
            .sum()
    }

    pub fn mode_deriv(&self, mode: usize, x: f64) -> f64 {
        let m = self.nodes.len();
        let row = &self.coeffs[mode * m..(mode + 1) * m];
        row.iter()
            .zip(&self.nodes)
            .map(|(c, y)| c * self.kernel.deriv(x - y))
            .sum()
    }
}
