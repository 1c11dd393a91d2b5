//! Convergence-rate estimation: ordinary least squares of log RMSE on
//! log h_bar, log(RMSE) ~ kappa log(h_bar) + log(C).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// fitted exponent kappa-hat (the regression slope)
    pub kappa: f64,
    /// log of the prefactor C
    pub log_prefactor: f64,
    /// root-mean-square regression residual
    pub residual: f64,
}

pub fn fit_rate(h_bars: &[f64], rmse: &[f64]) -> Result<RateFit> {
    if h_bars.len() != rmse.len() {
        return Err(Error::config("fit", "mismatched sample lengths"));
    }
    if h_bars.len() < 3 {
        return Err(Error::config("fit", "regression needs at least 3 levels"));
    }
    if h_bars.iter().chain(rmse).any(|&v| !(v > 0.0)) {
        return Err(Error::config("fit", "regression inputs must be positive"));
    }
    let x: Vec<f64> = h_bars.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = rmse.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let var_x: f64 = x.iter().map(|v| (v - mean_x).powi(2)).sum();
    if var_x == 0.0 {
        return Err(Error::config("fit", "all levels share one h_bar"));
    }
    let cov: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mean_x) * (b - mean_y))
        .sum();
    let kappa = cov / var_x;
    let log_prefactor = mean_y - kappa * mean_x;
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - (kappa * a + log_prefactor)).powi(2))
        .sum();
    Ok(RateFit {
        kappa,
        log_prefactor,
        residual: (ss_res / n).sqrt(),
    })
}
