//! Matern covariance kernel with half-integer smoothness.

use crate::{Error, Result};

/// Modified Bessel function of the second kind for half-integer order
/// `nu = p + 1/2`, evaluated via the closed form
///
/// ```text
/// K_{p+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_{k=0}^{p} (p+k)! / (k! (p-k)! (2x)^k)
/// ```
pub fn bessel_k_half(p: u32, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_half requires x > 0");
    let mut sum = 0.0;
    // term_k = (p+k)! / (k! (p-k)!) (2x)^{-k}, built up iteratively
    let mut term = 1.0;
    for k in 0..=p {
        if k > 0 {
            let kf = k as f64;
            let pf = p as f64;
            term *= (pf + kf) * (pf - kf + 1.0) / (kf * 2.0 * x);
        }
        sum += term;
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

/// Gamma(p + 1/2) = (2p)! sqrt(pi) / (4^p p!)
fn gamma_half(p: u32) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    for k in 0..p {
        g *= k as f64 + 0.5;
    }
    g
}

/// Stationary Matern kernel on the line,
/// `k(r) = sigma^2 2^{1-nu}/Gamma(nu) (sqrt(2 nu) r / delta)^nu K_nu(sqrt(2 nu) r / delta)`.
///
/// Only half-integer smoothness is supported; the spectral pipeline never
/// needs anything else and the Bessel function then has a closed form.
#[derive(Debug, Clone, Copy)]
pub struct MaternKernel {
    variance: f64,
    /// scaled inverse length sqrt(2 nu) / delta
    beta: f64,
    /// nu = p + 1/2
    p: u32,
    /// sigma^2 2^{1-nu} / Gamma(nu)
    prefactor: f64,
}

impl MaternKernel {
    pub fn new(nu: f64, variance: f64, correlation: f64) -> Result<Self> {
        if !(nu > 0.0) || !(variance > 0.0) || !(correlation > 0.0) {
            return Err(Error::config(
                "covariance",
                "matern parameters must be strictly positive",
            ));
        }
        let two_nu = 2.0 * nu;
        let p = (nu - 0.5).round();
        if (nu - 0.5 - p).abs() > 1e-9 || p < 0.0 {
            return Err(Error::config(
                "covariance.nu",
                format!("matern smoothness must be half-integer, got {nu}"),
            ));
        }
        let p = p as u32;
        let prefactor = variance * 2f64.powf(1.0 - nu) / gamma_half(p);
        Ok(Self {
            variance,
            beta: two_nu.sqrt() / correlation,
            p,
            prefactor,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Kernel value at lag `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let u = self.beta * r.abs();
        if u < 1e-14 {
            return self.variance;
        }
        let nu_half = 2 * self.p + 1; // 2*nu
        self.prefactor * u.powf(nu_half as f64 / 2.0) * bessel_k_half(self.p, u)
    }

    /// Derivative d k / d x at signed lag `x - y`, using
    /// d/du [u^nu K_nu(u)] = -u^nu K_{nu-1}(u).
    pub fn deriv(&self, signed_r: f64) -> f64 {
        let u = self.beta * signed_r.abs();
        if u < 1e-14 {
            // C^1 kernel for nu >= 3/2: slope vanishes at the origin
            return 0.0;
        }
        if self.p == 0 {
            // nu = 1/2, exponential kernel: not differentiable at 0, but
            // smooth away from it: k(r) = sigma^2 e^{-u}
            return -self.variance * self.beta * (-u).exp() * signed_r.signum();
        }
        let nu = self.p as f64 + 0.5;
        let magnitude = self.prefactor * self.beta * u.powf(nu) * bessel_k_half(self.p - 1, u);
        -magnitude * signed_r.signum()
    }
}
