//! Covariance operators, truncated Karhunen-Loeve bases and pathwise
//! realizations of the Gaussian part of the coefficient field.

mod kernel;
mod nystrom;

pub use kernel::{bessel_k_half, MaternKernel};

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Covariance operator of the Gaussian field.
///
/// `Matern` and `Brownian` live on the interval (0,1); `Sine2d` lives on the
/// unit square. Brownian and sine2d expose closed-form eigenpairs, the Matern
/// operator is decomposed numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Matern {
        nu: f64,
        variance: f64,
        correlation: f64,
    },
    Brownian,
    Sine2d {
        variance: f64,
        correlation: f64,
    },
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Sine2d { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CovarianceSpec::Matern {
                nu,
                variance,
                correlation,
            } => {
                if !(nu > 0.0 && variance > 0.0 && correlation > 0.0) {
                    return Err(Error::config(
                        "covariance",
                        "matern parameters must be strictly positive",
                    ));
                }
            }
            CovarianceSpec::Sine2d {
                variance,
                correlation,
            } => {
                if !(variance > 0.0 && correlation > 0.0) {
                    return Err(Error::config(
                        "covariance",
                        "sine2d parameters must be strictly positive",
                    ));
                }
            }
            CovarianceSpec::Brownian => {}
        }
        Ok(())
    }

    /// Brownian mode `i` (zero-based): eta_i = (2 sqrt(2) / ((2i+1) pi))^2.
    fn brownian_eigenvalue(i: usize) -> f64 {
        let odd = 2.0 * i as f64 + 1.0;
        8.0 / (odd * odd * std::f64::consts::PI * std::f64::consts::PI)
    }

    /// Sine2d mode `i` (one-based): eta_i = sigma^2 exp(-pi^2 i^2 delta^2).
    fn sine2d_eigenvalue(variance: f64, correlation: f64, i: usize) -> f64 {
        let pi = std::f64::consts::PI;
        variance * (-pi * pi * (i * i) as f64 * correlation * correlation).exp()
    }

    /// Tail mass Xi_n = sum_{i > n} eta_i of the closed-form spectra,
    /// summed to convergence.
    fn closed_form_tail(&self, n: usize) -> Result<f64> {
        match *self {
            CovarianceSpec::Brownian => {
                // direct block sum plus an integral remainder for the 1/(2i+1)^2 tail
                let block = 100_000usize;
                let mut acc = 0.0;
                for i in n..n + block {
                    acc += Self::brownian_eigenvalue(i);
                }
                let a = (n + block) as f64;
                acc += 8.0 / (std::f64::consts::PI * std::f64::consts::PI) / (4.0 * a);
                Ok(acc)
            }
            CovarianceSpec::Sine2d {
                variance,
                correlation,
            } => {
                let mut acc = 0.0;
                let mut i = n + 1;
                loop {
                    let term = Self::sine2d_eigenvalue(variance, correlation, i);
                    acc += term;
                    if term <= acc * 1e-18 || term < 1e-300 {
                        break;
                    }
                    i += 1;
                }
                Ok(acc)
            }
            CovarianceSpec::Matern { .. } => Err(Error::SpectrumUnavailable { kind: "matern" }),
        }
    }
}

enum ModeSet {
    /// e_i(x) = sin((2i+1) pi x / 2), i = 0, 1, ...
    Brownian,
    /// e_i(x, y) = sin(pi i x) sin(pi i y), i = 1, 2, ...
    Sine2d,
    Nystrom(nystrom::NystromSpectrum),
}

/// Truncated Karhunen-Loeve basis: the `n` leading eigenpairs of a covariance
/// operator together with the tail mass Xi_n = sum_{i>n} eta_i.
pub struct KLBasis {
    spec: CovarianceSpec,
    eigenvalues: Vec<f64>,
    /// suffix[j] = sum of eigenvalues[j..]
    suffix: Vec<f64>,
    tail: f64,
    modes: ModeSet,
}

impl KLBasis {
    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Number of retained modes.
    pub fn cutoff(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, mode: usize) -> f64 {
        self.eigenvalues[mode]
    }

    /// Tail mass of the full basis, Xi_{cutoff}.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Tail mass Xi_j for any truncation j <= cutoff.
    pub fn tail_at(&self, j: usize) -> f64 {
        assert!(j <= self.cutoff());
        self.tail + self.suffix[j]
    }

    /// Smallest cutoff n with Xi_n <= target. Errors when even the full basis
    /// does not reach the target.
    pub fn smallest_cutoff(&self, target: f64) -> Result<usize> {
        if self.tail_at(self.cutoff()) > target {
            return Err(Error::config(
                "levels",
                format!(
                    "tail target {target:.3e} unreachable within cutoff cap {} (Xi = {:.3e})",
                    self.cutoff(),
                    self.tail
                ),
            ));
        }
        // tail_at is nonincreasing in j
        let mut lo = 0usize;
        let mut hi = self.cutoff();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.tail_at(mid) <= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    /// Basis keeping only the leading `n` modes; the discarded mass moves
    /// into the tail.
    pub fn truncate(&self, n: usize) -> KLBasis {
        assert!(n <= self.cutoff() && n >= 1);
        let tail = self.tail_at(n);
        let eigenvalues = self.eigenvalues[..n].to_vec();
        let modes = match &self.modes {
            ModeSet::Brownian => ModeSet::Brownian,
            ModeSet::Sine2d => ModeSet::Sine2d,
            ModeSet::Nystrom(ny) => {
                let m = ny.nodes.len();
                ModeSet::Nystrom(nystrom::NystromSpectrum {
                    nodes: ny.nodes.clone(),
                    eigenvalues: ny.eigenvalues[..n].to_vec(),
                    coeffs: ny.coeffs[..n * m].to_vec(),
                    kernel: ny.kernel,
                })
            }
        };
        build_basis(self.spec, eigenvalues, tail, modes)
    }

    /// Point value of eigenfunction `mode`.
    pub fn mode_value(&self, mode: usize, p: Point) -> f64 {
        let pi = std::f64::consts::PI;
        match &self.modes {
            ModeSet::Brownian => ((2 * mode + 1) as f64 * pi * p[0] / 2.0).sin(),
            ModeSet::Sine2d => {
                let i = (mode + 1) as f64;
                (pi * i * p[0]).sin() * (pi * i * p[1]).sin()
            }
            ModeSet::Nystrom(ny) => ny.mode_value(mode, p[0]),
        }
    }

    /// Gradient of eigenfunction `mode`.
    pub fn mode_gradient(&self, mode: usize, p: Point) -> [f64; 2] {
        let pi = std::f64::consts::PI;
        match &self.modes {
            ModeSet::Brownian => {
                let k = (2 * mode + 1) as f64 * pi / 2.0;
                [k * (k * p[0]).cos(), 0.0]
            }
            ModeSet::Sine2d => {
                let k = (mode + 1) as f64 * pi;
                [
                    k * (k * p[0]).cos() * (k * p[1]).sin(),
                    k * (k * p[0]).sin() * (k * p[1]).cos(),
                ]
            }
            ModeSet::Nystrom(ny) => [ny.mode_deriv(mode, p[0]), 0.0],
        }
    }

    fn check_point(&self, p: Point) -> Result<()> {
        let inside = match self.dim() {
            1 => (0.0..=1.0).contains(&p[0]),
            _ => (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]),
        };
        if inside {
            Ok(())
        } else {
            Err(Error::DomainPoint { x: p[0], y: p[1] })
        }
    }
}

/// Closed-form spectra: Brownian on (0,1) and the sine basis on the unit
/// square. The tail is summed analytically to convergence.
pub fn closed_form_spectrum(spec: &CovarianceSpec, n: usize) -> Result<KLBasis> {
    spec.validate()?;
    assert!(n >= 1, "cutoff must be at least 1");
    let eigenvalues: Vec<f64> = match *spec {
        CovarianceSpec::Brownian => (0..n).map(CovarianceSpec::brownian_eigenvalue).collect(),
        CovarianceSpec::Sine2d {
            variance,
            correlation,
        } => (1..=n)
            .map(|i| CovarianceSpec::sine2d_eigenvalue(variance, correlation, i))
            .collect(),
        CovarianceSpec::Matern { .. } => return Err(Error::SpectrumUnavailable { kind: "matern" }),
    };
    let tail = spec.closed_form_tail(n)?;
    let modes = match spec {
        CovarianceSpec::Brownian => ModeSet::Brownian,
        CovarianceSpec::Sine2d { .. } => ModeSet::Sine2d,
        CovarianceSpec::Matern { .. } => unreachable!(),
    };
    Ok(build_basis(*spec, eigenvalues, tail, modes))
}

/// Nystrom spectrum of the Matern operator: `m` midpoint quadrature nodes,
/// dense symmetric eigensolve, `n` leading eigenpairs. The tail is the trace
/// estimate sigma^2 |domain| minus the retained mass, an upper bound for the
/// true tail.
pub fn nystrom_spectrum(spec: &CovarianceSpec, m: usize, n: usize) -> Result<KLBasis> {
    spec.validate()?;
    let CovarianceSpec::Matern {
        nu,
        variance,
        correlation,
    } = *spec
    else {
        return Err(Error::config(
            "covariance",
            "nystrom_spectrum only applies to matern covariance",
        ));
    };
    let kernel = MaternKernel::new(nu, variance, correlation)?;
    let spectrum = nystrom::decompose(kernel, m, n)?;
    let retained: f64 = spectrum.eigenvalues.iter().sum();
    let tail = (variance - retained).max(0.0);
    let eigenvalues = spectrum.eigenvalues.clone();
    Ok(build_basis(
        *spec,
        eigenvalues,
        tail,
        ModeSet::Nystrom(spectrum),
    ))
}

fn build_basis(spec: CovarianceSpec, eigenvalues: Vec<f64>, tail: f64, modes: ModeSet) -> KLBasis {
    let n = eigenvalues.len();
    let mut suffix = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] + eigenvalues[j];
    }
    KLBasis {
        spec,
        eigenvalues,
        suffix,
        tail,
        modes,
    }
}

/// One pathwise realization W_N = sum_i sqrt(eta_i) e_i Z_i of the truncated
/// field, determined by the basis and the normal vector `z`.
pub struct FieldRealization {
    basis: Arc<KLBasis>,
    z: Vec<f64>,
}

/// Draw the standard-normal coordinates of a realization. Deterministic in
/// (basis, generator state), so equal seeds give bitwise-equal fields.
pub fn sample_field<R: Rng + ?Sized>(basis: &Arc<KLBasis>, rng: &mut R) -> FieldRealization {
    let z = (0..basis.cutoff())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    FieldRealization {
        basis: Arc::clone(basis),
        z,
    }
}

impl FieldRealization {
    pub fn from_coordinates(basis: &Arc<KLBasis>, z: Vec<f64>) -> Self {
        assert!(z.len() <= basis.cutoff());
        FieldRealization {
            basis: Arc::clone(basis),
            z,
        }
    }

    pub fn basis(&self) -> &Arc<KLBasis> {
        &self.basis
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.z
    }

    /// Realization with the leading `n` coordinates of this one; the shared
    /// prefix is what couples discretization levels in the experiments.
    pub fn truncate(&self, n: usize) -> FieldRealization {
        assert!(n <= self.z.len());
        FieldRealization {
            basis: Arc::clone(&self.basis),
            z: self.z[..n].to_vec(),
        }
    }

    pub fn eval(&self, p: Point) -> Result<f64> {
        self.basis.check_point(p)?;
        Ok(self.evaluator().eval(p))
    }

    pub fn gradient(&self, p: Point) -> Result<[f64; 2]> {
        self.basis.check_point(p)?;
        Ok(self.evaluator().gradient(p))
    }

    /// Snapshot with the per-mode weights premultiplied (and, for Nystrom
    /// bases, the modes collapsed against the kernel nodes) so that repeated
    /// point evaluation during assembly is cheap.
    pub fn evaluator(&self) -> FieldEvaluator {
        let n = self.z.len();
        let weights: Vec<f64> = (0..n)
            .map(|i| self.basis.eigenvalue(i).sqrt() * self.z[i])
            .collect();
        match &self.basis.modes {
            _ if n == 0 => FieldEvaluator::Zero,
            ModeSet::Brownian => FieldEvaluator::Brownian { weights },
            ModeSet::Sine2d => FieldEvaluator::Sine2d { weights },
            ModeSet::Nystrom(ny) => {
                let m = ny.nodes.len();
                let mut collapsed = vec![0.0; m];
                for (i, w) in weights.iter().enumerate() {
                    if *w != 0.0 {
                        let row = &ny.coeffs[i * m..(i + 1) * m];
                        for (g, c) in collapsed.iter_mut().zip(row) {
                            *g += w * c;
                        }
                    }
                }
                FieldEvaluator::Nystrom {
                    collapsed,
                    nodes: ny.nodes.clone(),
                    kernel: ny.kernel,
                }
            }
        }
    }
}

/// Fast point evaluation of one realization. Points are assumed to lie in the
/// closed domain; [`FieldRealization::eval`] performs the domain check.
pub enum FieldEvaluator {
    Zero,
    Brownian {
        weights: Vec<f64>,
    },
    Sine2d {
        weights: Vec<f64>,
    },
    Nystrom {
        collapsed: Vec<f64>,
        nodes: Vec<f64>,
        kernel: MaternKernel,
    },
}

impl FieldEvaluator {
    pub fn eval(&self, p: Point) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            FieldEvaluator::Zero => 0.0,
            FieldEvaluator::Brownian { weights } => {
                // sin((2i+1) theta) by the three-term recurrence
                let theta = pi * p[0] / 2.0;
                let step = 2.0 * (2.0 * theta).cos();
                let mut prev = (-theta).sin();
                let mut cur = theta.sin();
                let mut acc = 0.0;
                for w in weights {
                    acc += w * cur;
                    let next = step * cur - prev;
                    prev = cur;
                    cur = next;
                }
                acc
            }
            FieldEvaluator::Sine2d { weights } => {
                let (sx, sy) = (pi * p[0], pi * p[1]);
                let (cx, cy) = (2.0 * sx.cos(), 2.0 * sy.cos());
                let (mut px, mut py) = (0.0, 0.0);
                let (mut vx, mut vy) = (sx.sin(), sy.sin());
                let mut acc = 0.0;
                for w in weights {
                    acc += w * vx * vy;
                    let nx = cx * vx - px;
                    px = vx;
                    vx = nx;
                    let ny = cy * vy - py;
                    py = vy;
                    vy = ny;
                }
                acc
            }
            FieldEvaluator::Nystrom {
                collapsed,
                nodes,
                kernel,
            } => collapsed
                .iter()
                .zip(nodes)
                .map(|(g, y)| g * kernel.eval(p[0] - y))
                .sum(),
        }
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        let pi = std::f64::consts::PI;
        match self {
            FieldEvaluator::Zero => [0.0, 0.0],
            FieldEvaluator::Brownian { weights } => {
                let theta = pi * p[0] / 2.0;
                let step = 2.0 * (2.0 * theta).cos();
                let mut prev = (-theta).cos();
                let mut cur = theta.cos();
                let mut acc = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    let k = (2 * i + 1) as f64 * pi / 2.0;
                    acc += w * k * cur;
                    let next = step * cur - prev;
                    prev = cur;
                    cur = next;
                }
                [acc, 0.0]
            }
            FieldEvaluator::Sine2d { weights } => {
                let (sx, sy) = (pi * p[0], pi * p[1]);
                let (tx, ty) = (2.0 * sx.cos(), 2.0 * sy.cos());
                let (mut psx, mut psy, mut pcx, mut pcy) = (0.0, 0.0, 1.0, 1.0);
                let (mut vsx, mut vsy, mut vcx, mut vcy) = (sx.sin(), sy.sin(), sx.cos(), sy.cos());
                let mut gx = 0.0;
                let mut gy = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    let k = (i + 1) as f64 * pi;
                    gx += w * k * vcx * vsy;
                    gy += w * k * vsx * vcy;
                    let n1 = tx * vsx - psx;
                    psx = vsx;
                    vsx = n1;
                    let n2 = ty * vsy - psy;
                    psy = vsy;
                    vsy = n2;
                    let n3 = tx * vcx - pcx;
                    pcx = vcx;
                    vcx = n3;
                    let n4 = ty * vcy - pcy;
                    pcy = vcy;
                    vcy = n4;
                }
                [gx, gy]
            }
            FieldEvaluator::Nystrom {
                collapsed,
                nodes,
                kernel,
            } => {
                let gx = collapsed
                    .iter()
                    .zip(nodes)
                    .map(|(g, y)| g * kernel.deriv(p[0] - y))
                    .sum();
                [gx, 0.0]
            }
        }
    }
}
