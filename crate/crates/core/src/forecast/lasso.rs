//! Adaptive-lasso quantile regression with cross-validated penalty.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::forecast::qreg::{check_loss, quantile_regression};
use crate::stats::quantile_sorted;

pub const ADAPTIVE_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    pub tau: f64,
    /// Explicit penalty grid; `None` builds a geometric grid below the
    /// smallest penalty that zeroes every coefficient.
    pub lambdas: Option<Vec<f64>>,
    pub n_lambda: usize,
    pub folds: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig { tau: 0.5, lambdas: None, n_lambda: 12, folds: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    /// Intercept first, then one coefficient per column.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub adaptive_weights: Vec<f64>,
    /// `(lambda, mean held-out check loss)` for every grid point.
    pub cv_loss: Vec<(f64, f64)>,
}

fn design(rows: &[&[f64]]) -> DMatrix<f64> {
    let k = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), k + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] })
}

fn penalties(lambda: f64, omega: &[f64]) -> Vec<f64> {
    std::iter::once(0.0).chain(omega.iter().map(|w| lambda * w)).collect()
}

/// Fits one penalised model on `rows`/`y` with fixed adaptive weights.
pub fn fit_fixed(rows: &[&[f64]], y: &[f64], tau: f64, lambda: f64, omega: &[f64]) -> Result<Vec<f64>> {
    let x = design(rows);
    Ok(quantile_regression(&x, y, tau, &penalties(lambda, omega))?.beta)
}

pub fn predict(coef: &[f64], row: &[f64]) -> f64 {
    coef[0] + coef[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

/// Smallest penalty at which the all-zero slope vector is optimal, using the
/// check-loss subgradient at the intercept-only fit.
fn lambda_max(rows: &[&[f64]], y: &[f64], tau: f64, omega: &[f64]) -> f64 {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let q = quantile_sorted(&s, tau);
    let k = omega.len();
    let mut out: f64 = 0.0;
    for j in 0..k {
        let g: f64 = rows.iter().zip(y).map(|(r, yi)| r[j] * if *yi < q { tau - 1.0 } else { tau }).sum();
        out = out.max(g.abs() / omega[j]);
    }
    out.max(1e-8)
}

/// Adaptive-lasso quantile regression on a dense (already scaled) design.
pub fn fit_quantile_lasso(x: &[Vec<f64>], y: &[f64], cfg: &LassoConfig, exec: Exec) -> Result<LassoFit> {
    let n = x.len();
    let k = x.first().map_or(0, |r| r.len());
    if n != y.len() {
        return Err(Error::InvalidConfig("row count and response length differ".into()));
    }
    if n < k + 2 {
        return Err(Error::DegenerateDesign(format!("{n} rows for {k} columns")));
    }
    if cfg.folds < 2 || cfg.folds > n {
        return Err(Error::InvalidConfig("folds must lie in [2, rows]".into()));
    }
    let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
    let pilot = quantile_regression(&design(&rows), y, cfg.tau, &vec![0.0; k + 1])?;
    let omega: Vec<f64> = pilot.beta[1..].iter().map(|b| 1.0 / (b.abs() + ADAPTIVE_EPS)).collect();

    let grid = match &cfg.lambdas {
        Some(g) if !g.is_empty() => g.clone(),
        _ => {
            let top = lambda_max(&rows, y, cfg.tau, &omega);
            let m = cfg.n_lambda.max(2);
            (0..m).map(|i| top * 10f64.powf(-3.0 * i as f64 / (m - 1) as f64)).collect()
        }
    };
    let cv: Vec<Result<f64>> = map_slice(exec, &grid, |lambda| {
        let mut loss = 0.0;
        for f in 0..cfg.folds {
            let (mut tr, mut ty, mut te, mut ey) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..n {
                if i % cfg.folds == f {
                    te.push(rows[i]);
                    ey.push(y[i]);
                } else {
                    tr.push(rows[i]);
                    ty.push(y[i]);
                }
            }
            let coef = fit_fixed(&tr, &ty, cfg.tau, *lambda, &omega)?;
            loss += te.iter().zip(&ey).map(|(r, yi)| check_loss(yi - predict(&coef, r), cfg.tau)).sum::<f64>();
        }
        Ok(loss / n as f64)
    });
    let mut cv_loss = Vec::with_capacity(grid.len());
    for (l, r) in grid.iter().zip(cv) {
        cv_loss.push((*l, r?));
    }
    // ties go to the larger penalty
    let mut best = 0;
    for i in 1..cv_loss.len() {
        let better = cv_loss[i].1 < cv_loss[best].1
            || (cv_loss[i].1 == cv_loss[best].1 && cv_loss[i].0 > cv_loss[best].0);
        if better {
            best = i;
        }
    }
    let lambda = cv_loss[best].0;
    let coefficients = fit_fixed(&rows, y, cfg.tau, lambda, &omega)?;
    Ok(LassoFit { coefficients, lambda, adaptive_weights: omega, cv_loss })
}
