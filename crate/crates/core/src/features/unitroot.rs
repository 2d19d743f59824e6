//! KPSS, Phillips-Perron and OCSB statistics, plus the differencing counts
//! derived from them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regress::{design_with_intercept, ols};
use crate::stats::{diff, mean};

/// 5% critical value of the level-stationarity KPSS test.
pub const KPSS_LEVEL_CRIT_5: f64 = 0.463;

fn bartlett_long_run(e: &[f64], lags: usize) -> f64 {
    let n = e.len() as f64;
    let mut s = e.iter().map(|v| v * v).sum::<f64>() / n;
    for l in 1..=lags.min(e.len().saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let g: f64 = e[l..].iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / n;
        s += 2.0 * w * g;
    }
    s
}

fn kpss_from_residuals(e: &[f64], lags: usize) -> f64 {
    let n = e.len() as f64;
    let mut cum = 0.0;
    let mut ss = 0.0;
    for v in e {
        cum += v;
        ss += cum * cum;
    }
    let lr = bartlett_long_run(e, lags);
    if !(lr > 0.0) {
        return 0.0;
    }
    ss / (n * n * lr)
}

/// KPSS statistic under a linear-trend null with a lag-1 Bartlett window.
pub fn kpss_trend(x: &[f64]) -> Result<f64> {
    if x.len() < 12 {
        return Err(Error::TooShort { need: 12, got: x.len() });
    }
    let t: Vec<f64> = (1..=x.len()).map(|i| i as f64).collect();
    let fit = ols(&design_with_intercept(x.len(), &[t]), x)?;
    Ok(kpss_from_residuals(&fit.residuals, 1))
}

/// KPSS statistic under a level null with the given Bartlett truncation.
pub fn kpss_level(x: &[f64], lags: usize) -> f64 {
    let m = mean(x);
    let e: Vec<f64> = x.iter().map(|v| v - m).collect();
    kpss_from_residuals(&e, lags)
}

/// Default truncation lag for the level test, `trunc(3 sqrt(n) / 13)`.
pub fn kpss_level_lags(n: usize) -> usize {
    (3.0 * (n as f64).sqrt() / 13.0).trunc() as usize
}

/// Phillips-Perron Z-alpha with a constant and one Newey-West lag.
pub fn pp_z_alpha(x: &[f64]) -> Result<f64> {
    if x.len() < 12 {
        return Err(Error::TooShort { need: 12, got: x.len() });
    }
    let lhs = &x[1..];
    let lag = x[..x.len() - 1].to_vec();
    let n = lhs.len();
    let fit = ols(&design_with_intercept(n, &[lag]), lhs)?;
    let u = &fit.residuals;
    let nf = n as f64;
    let k = 2.0;
    let s2 = fit.ssr / (nf - k);
    let gamma0 = fit.ssr / nf;
    let lam2 = bartlett_long_run(u, 1);
    let sigma = fit.std_errors()[1];
    if !(sigma > 0.0) || !(s2 > 0.0) {
        return Err(Error::SingularDesign);
    }
    let rho = fit.coef[1];
    Ok(nf * (rho - 1.0) - 0.5 * (nf * nf * sigma * sigma / s2) * (lam2 - gamma0))
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Smallest number of differences (at most 2) after which the level KPSS
/// test no longer rejects at 5%.
pub fn ndiffs(x: &[f64]) -> Result<u32> {
    if x.len() < 12 {
        return Err(Error::TooShort { need: 12, got: x.len() });
    }
    let mut y = x.to_vec();
    for d in 0..=2u32 {
        if y.len() < 3 || is_constant(&y) {
            return Ok(d);
        }
        if kpss_level(&y, kpss_level_lags(y.len())) < KPSS_LEVEL_CRIT_5 {
            return Ok(d);
        }
        if d < 2 {
            y = diff(&y, 1);
        }
    }
    Ok(2)
}

/// 5% critical value of the OCSB statistic for seasonal period `m`.
pub fn ocsb_crit(m: usize) -> f64 {
    let l = (m as f64).ln() - 0.7656451;
    -0.2937411 * (-0.2850853 * l - 0.05983644 * l * l).exp() - 1.652202
}

/// OCSB t-statistic with one autoregressive lag in the auxiliary fit.
pub fn ocsb_stat(x: &[f64], m: usize) -> Result<f64> {
    let n = x.len();
    if m < 2 || n < m + 5 {
        return Err(Error::TooShort { need: m + 5, got: n });
    }
    let yfd = diff(x, m);
    let yy = diff(&yfd, 1);
    let len = yy.len() - 1;
    let mf = &yy[..len];
    let y = &yy[1..];
    let ar = ols(&design_with_intercept(len, &[mf.to_vec()]), y)?;
    let (c, b) = (ar.coef[0], ar.coef[1]);
    let dx = diff(x, 1);
    let mut design = DMatrix::zeros(len, 3);
    for i in 0..len {
        design[(i, 0)] = mf[i];
        design[(i, 1)] = yfd[i + 1] - c - b * yfd[i];
        design[(i, 2)] = dx[i + 1] - c - b * dx[i];
    }
    let fit = ols(&design, y)?;
    let se = fit.std_errors()[2];
    if !(se > 0.0) {
        return Err(Error::SingularDesign);
    }
    Ok(fit.coef[2] / se)
}

/// Seasonal differences (0 or 1) required according to the OCSB test.
pub fn nsdiffs(x: &[f64], m: usize) -> u32 {
    if m <= 1 || x.len() < 2 * m + 8 || is_constant(x) {
        return 0;
    }
    match ocsb_stat(x, m) {
        Ok(stat) if stat.is_finite() => (stat > ocsb_crit(m)) as u32,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut r = stream(seed, &[]);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    fn cumsum(x: &[f64]) -> Vec<f64> {
        x.iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect()
    }

    #[test]
    fn trend_stationary_passes_kpss() {
        let e = noise(1, 2000);
        let x: Vec<f64> = e.iter().enumerate().map(|(t, v)| 0.01 * t as f64 + v).collect();
        assert!(kpss_trend(&x).unwrap() < 0.146);
    }

    #[test]
    fn random_walks_reject_kpss() {
        let hits = (0..100)
            .filter(|s| kpss_trend(&cumsum(&noise(100 + s, 2000))).unwrap() > 0.146)
            .count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn white_noise_pp_strongly_negative() {
        assert!(pp_z_alpha(&noise(2, 2000)).unwrap() < -100.0);
    }

    #[test]
    fn ndiffs_cases() {
        assert_eq!(ndiffs(&noise(3, 500)).unwrap(), 0);
        let ones = (0..100).filter(|s| ndiffs(&cumsum(&noise(200 + s, 500))).unwrap() == 1).count();
        assert!(ones >= 95, "{ones}");
        assert_eq!(ndiffs(&cumsum(&cumsum(&noise(4, 500)))).unwrap(), 2);
        assert_eq!(ndiffs(&[2.0; 20]).unwrap(), 0);
    }

    #[test]
    fn nsdiffs_cases() {
        assert_eq!(nsdiffs(&noise(5, 100), 1), 0);
        let e = noise(6, 240);
        let mut walk = e.clone();
        for t in 12..walk.len() {
            walk[t] += walk[t - 12];
        }
        assert_eq!(nsdiffs(&walk, 12), 1);
        let mut sar = e;
        for t in 4..sar.len() {
            sar[t] += 0.3 * sar[t - 4];
        }
        assert_eq!(nsdiffs(&sar, 4), 0);
        assert_eq!(nsdiffs(&noise(7, 20), 12), 0);
    }

    #[test]
    fn critical_values() {
        assert!((ocsb_crit(12) - -1.802_962_79).abs() < 1e-8);
        assert!((ocsb_crit(4) - -1.892_699_92).abs() < 1e-8);
    }
}
