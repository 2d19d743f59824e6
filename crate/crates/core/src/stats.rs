//! Small descriptive-statistics kernels shared across modules.

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `n - 1`.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Centres and scales to zero mean and unit sample standard deviation.
pub fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::TooShort { need: 2, got: x.len() });
    }
    let m = mean(x);
    let sd = std_dev(x);
    if !(sd > 0.0) || !sd.is_finite() || sd <= m.abs() * 1e-14 {
        return Err(Error::DegenerateSeries);
    }
    Ok(x.iter().map(|v| (v - m) / sd).collect())
}

/// Lag-`lag` differences.
pub fn diff(x: &[f64], lag: usize) -> Vec<f64> {
    if x.len() <= lag {
        return Vec::new();
    }
    (lag..x.len()).map(|t| x[t] - x[t - lag]).collect()
}

/// Sample autocorrelations for lags `1..=max_lag` (biased estimator).
///
/// Returns `None` when the series has zero variance.
pub fn acf(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let m = mean(x);
    let centred: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = centred.iter().map(|v| v * v).sum();
    if !(denom > 0.0) {
        return None;
    }
    let out = (1..=max_lag)
        .map(|k| {
            if k >= n {
                0.0
            } else {
                centred[k..].iter().zip(&centred[..n - k]).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect();
    Some(out)
}

/// Partial autocorrelations for lags `1..=max_lag` via Durbin-Levinson.
pub fn pacf(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let r = acf(x, max_lag)?;
    Some(pacf_from_acf(&r))
}

/// Durbin-Levinson recursion on autocorrelations `r[0] = rho(1), ...`.
pub fn pacf_from_acf(r: &[f64]) -> Vec<f64> {
    let p = r.len();
    let mut out = Vec::with_capacity(p);
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut v = 1.0;
    for k in 0..p {
        let num = r[k] - phi.iter().enumerate().map(|(j, c)| c * r[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        out.push(a);
    }
    out
}

/// Quantile with linear interpolation between order statistics (the common
/// "type 7" definition). `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

pub fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn standardize_hand_example() {
        let z = standardize(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(z[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[2], 1.0, epsilon = 1e-12);
        assert!(matches!(standardize(&[4.0; 5]), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn pacf_of_ar1_acf_cuts_off() {
        let r: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let p = pacf_from_acf(&r);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        for v in &p[1..] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn type7_quantiles() {
        let s = [0.0, 10.0, 20.0];
        assert_eq!(quantile_sorted(&s, 0.25), 5.0);
        assert_eq!(quantile_sorted(&s, 0.5), 10.0);
        assert_eq!(quantile_sorted(&s, 0.75), 15.0);
    }

    #[test]
    fn diff_lags() {
        assert_eq!(diff(&[1.0, 4.0, 9.0, 16.0], 1), vec![3.0, 5.0, 7.0]);
        assert_eq!(diff(&[1.0, 4.0, 9.0, 16.0], 2), vec![8.0, 12.0]);
        assert!(diff(&[1.0], 1).is_empty());
    }
}
