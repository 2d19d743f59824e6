//! Conditional heteroskedasticity features from a pre-whitened series and
//! its GARCH(1,1) standardized residuals.

use crate::error::{Error, Result};
use crate::regress::{design_with_intercept, ols, r_squared};
use crate::stats::{acf, mean, standardize};

/// Lags used for both the autocorrelation sums and the R^2 regressions.
pub const HET_LAGS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeteroFeatures {
    pub arch_acf: f64,
    pub garch_acf: f64,
    pub arch_r2: f64,
    pub garch_r2: f64,
}

/// Removes mean, linear trend and an AIC-selected Yule-Walker AR part.
pub fn prewhiten(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let detr = ols(&design_with_intercept(n, &[t]), x)?.residuals;
    let max_order = (n / 10).min(10);
    let r = match acf(&detr, max_order.max(1)) {
        Some(r) => r,
        None => return Err(Error::DegenerateSeries),
    };
    // Durbin-Levinson keeping every intermediate coefficient vector
    let mut phi: Vec<f64> = Vec::new();
    let mut best_phi = Vec::new();
    let mut v = 1.0;
    let mut best_aic = 0.0; // order 0: n ln(1)
    for k in 0..max_order {
        let num = r[k] - phi.iter().enumerate().map(|(j, c)| c * r[k - 1 - j]).sum::<f64>();
        let a = num / v;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        if !(v > 0.0) {
            break;
        }
        let aic = n as f64 * v.ln() + 2.0 * (k + 1) as f64;
        if aic < best_aic {
            best_aic = aic;
            best_phi = phi.clone();
        }
    }
    let p = best_phi.len();
    let m = mean(&detr);
    Ok((p..n)
        .map(|t| {
            detr[t] - m - best_phi.iter().enumerate().map(|(i, c)| c * (detr[t - 1 - i] - m)).sum::<f64>()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GarchFit {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub nll: f64,
}

fn garch_params(theta: &[f64; 3], var: f64) -> (f64, f64, f64) {
    let ea = theta[1].exp();
    let eb = theta[2].exp();
    let s = 1.0 + ea + eb;
    (theta[0].exp() * var, 0.999 * ea / s, 0.999 * eb / s)
}

fn garch_nll(x: &[f64], omega: f64, alpha: f64, beta: f64, var: f64) -> f64 {
    let mut h = var;
    let mut total = 0.0;
    for (t, v) in x.iter().enumerate() {
        if t > 0 {
            h = omega + alpha * x[t - 1] * x[t - 1] + beta * h;
        }
        if !(h > 0.0) || !h.is_finite() {
            return f64::INFINITY;
        }
        total += h.ln() + v * v / h;
    }
    0.5 * total
}

fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: F, start: [f64; 3], step: f64, max_iter: usize) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut p = start;
            if i > 0 {
                p[i - 1] += step;
            }
            (p, f(&p))
        })
        .collect();
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[3].1 - simplex[0].1).abs();
        if spread < 1e-12 * (1.0 + simplex[0].1.abs()) {
            let size = simplex[1..]
                .iter()
                .map(|(p, _)| (0..3).map(|k| (p[k] - simplex[0].0[k]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < 1e-9 {
                break;
            }
        }
        let mut c = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for k in 0..3 {
                c[k] += p[k] / 3.0;
            }
        }
        let worst = simplex[3];
        let along = |t: f64| {
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = c[k] + t * (worst.0[k] - c[k]);
            }
            p
        };
        let r = along(-1.0);
        let fr = f(&r);
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = f(&e);
            simplex[3] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (r, fr);
        } else {
            let (cp, fc) = if fr < worst.1 {
                let p = along(-0.5);
                (p, f(&p))
            } else {
                let p = along(0.5);
                (p, f(&p))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (cp, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    for k in 0..3 {
                        s.0[k] = best[k] + 0.5 * (s.0[k] - best[k]);
                    }
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Gaussian quasi-likelihood GARCH(1,1) from three fixed starting points.
pub fn fit_garch11(x: &[f64]) -> Result<GarchFit> {
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::GarchFitFailed);
    }
    let starts: [(f64, f64); 3] = [(0.05, 0.90), (0.10, 0.80), (0.25, 0.50)];
    let mut best: Option<([f64; 3], f64)> = None;
    for (a, b) in starts {
        let rest = 1.0 - (a + b) / 0.999;
        let theta0 = [(1.0 - a - b).ln(), (a / 0.999 / rest).ln(), (b / 0.999 / rest).ln()];
        let obj = |th: &[f64; 3]| {
            let (o, al, be) = garch_params(th, var);
            garch_nll(x, o, al, be, var)
        };
        let mut cur = nelder_mead(obj, theta0, 0.5, 2000);
        // one restart from the optimum tightens the simplex
        cur = nelder_mead(obj, cur.0, 0.05, 2000);
        if cur.1.is_finite() && best.as_ref().is_none_or(|b| cur.1 < b.1) {
            best = Some(cur);
        }
    }
    let (theta, nll) = best.ok_or(Error::GarchFitFailed)?;
    let (omega, alpha, beta) = garch_params(&theta, var);
    Ok(GarchFit { omega, alpha, beta, nll })
}

/// Standardized residuals `x_t / sigma_t` under a fitted GARCH(1,1).
pub fn garch_residuals(x: &[f64], fit: &GarchFit) -> Vec<f64> {
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let mut h = var;
    x.iter()
        .enumerate()
        .map(|(t, v)| {
            if t > 0 {
                h = fit.omega + fit.alpha * x[t - 1] * x[t - 1] + fit.beta * h;
            }
            v / h.sqrt()
        })
        .collect()
}

fn acf_sum_sq(sq: &[f64]) -> f64 {
    acf(sq, HET_LAGS).map(|r| r.iter().map(|v| v * v).sum()).unwrap_or(0.0)
}

fn lag_r2(sq: &[f64]) -> Result<f64> {
    let n = sq.len();
    let rows = n - HET_LAGS;
    let cols: Vec<Vec<f64>> = (1..=HET_LAGS).map(|l| sq[HET_LAGS - l..n - l].to_vec()).collect();
    let y = &sq[HET_LAGS..];
    match ols(&design_with_intercept(rows, &cols), y) {
        Ok(fit) => Ok(r_squared(y, fit.ssr)),
        Err(Error::SingularDesign) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// ARCH/GARCH autocorrelation sums and lag-regression R^2 values.
pub fn heterogeneity_features(x: &[f64]) -> Result<HeteroFeatures> {
    if x.len() < 50 {
        return Err(Error::TooShort { need: 50, got: x.len() });
    }
    let w = prewhiten(x)?;
    let w = standardize(&w)?;
    let fit = fit_garch11(&w)?;
    let z = garch_residuals(&w, &fit);
    let x2: Vec<f64> = w.iter().map(|v| v * v).collect();
    let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
    Ok(HeteroFeatures {
        arch_acf: acf_sum_sq(&x2),
        garch_acf: acf_sum_sq(&z2),
        arch_r2: lag_r2(&x2)?,
        garch_r2: lag_r2(&z2)?,
    })
}
