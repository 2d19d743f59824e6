//! Ordinary least squares on small dense designs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    /// Diagonal of `(X'X)^{-1}`.
    pub xtx_inv_diag: Vec<f64>,
}

impl OlsFit {
    /// Classical standard errors with `s^2 = SSR / (n - p)`.
    pub fn std_errors(&self) -> Vec<f64> {
        let n = self.residuals.len();
        let p = self.coef.len();
        let s2 = if n > p { self.ssr / (n - p) as f64 } else { f64::NAN };
        self.xtx_inv_diag.iter().map(|v| (s2 * v).sqrt()).collect()
    }
}

/// Solves `min ||y - X b||` by Householder QR. Columns whose pivot falls
/// below a relative tolerance make the design singular.
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if n < p || p == 0 {
        return Err(Error::SingularDesign);
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| x.column(j).norm()).fold(0.0f64, f64::max);
    let tol = scale.max(1.0) * 1e-10 * n as f64;
    for j in 0..p {
        if !(r[(j, j)].abs() > tol * 1e-3) || !r[(j, j)].is_finite() {
            return Err(Error::SingularDesign);
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularDesign)?;
    let fitted = x * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr = residuals.iter().map(|v| v * v).sum();
    let r_sq = r.rows(0, p).into_owned();
    let rinv = r_sq.try_inverse().ok_or(Error::SingularDesign)?;
    let xtx_inv_diag = (0..p).map(|j| rinv.row(j).norm_squared()).collect();
    Ok(OlsFit {
        coef: coef.iter().copied().collect(),
        residuals,
        ssr,
        xtx_inv_diag,
    })
}

/// Coefficient of determination for a regression that includes an intercept.
pub fn r_squared(y: &[f64], ssr: f64) -> f64 {
    let m = crate::stats::mean(y);
    let sst: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if !(sst > 0.0) {
        return 0.0;
    }
    (1.0 - ssr / sst).clamp(0.0, 1.0)
}

/// Builds a design with an intercept column followed by `cols`.
pub fn design_with_intercept(n: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, cols.len() + 1);
    for i in 0..n {
        m[(i, 0)] = 1.0;
        for (j, c) in cols.iter().enumerate() {
            m[(i, j + 1)] = c[i];
        }
    }
    m
}
