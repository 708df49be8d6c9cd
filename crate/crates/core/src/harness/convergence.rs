//! Empirical convergence orders from log-log least squares.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// Slope of `log err` against `log h`.
    pub order: f64,
    /// `C` in `err ≈ C·h^order`.
    pub constant: f64,
}

impl OrderFit {
    pub fn predict(&self, h: f64) -> f64 {
        self.constant * h.powf(self.order)
    }
}

/// Unweighted least squares on `(ln h, ln err)`. Needs at least 3 points, all
/// positive.
pub fn fit_order(h: &[f64], err: &[f64]) -> Result<OrderFit> {
    if h.len() != err.len() {
        return Err(Error::InvalidInput("parameter and error lists differ in length".into()));
    }
    if h.len() < 3 {
        return Err(Error::InvalidInput(format!("order fit needs at least 3 points, got {}", h.len())));
    }
    if let Some(bad) = h.iter().chain(err).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!("order fit needs positive finite values, got {bad}")));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("order fit needs distinct parameters".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    Ok(OrderFit {
        order,
        constant: (my - order * mx).exp(),
    })
}

/// True when errors strictly decrease as the parameter decreases.
pub fn is_monotone(h: &[f64], err: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = h.iter().copied().zip(err.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.windows(2).all(|w| w[1].1 < w[0].1)
}
