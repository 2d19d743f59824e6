//! Seasonal-trend decomposition by loess, its multi-seasonal back-fitting
//! extension and a local-linear smoother for non-seasonal trends.

use crate::error::{Error, Result};

/// Seasonal window used for every period.
pub const SEASONAL_WINDOW: usize = 21;
/// Back-fitting sweeps for multi-seasonal series.
pub const SWEEPS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct STLDecomposition {
    pub trend: Vec<f64>,
    /// One component per retained period, in ascending period order.
    pub seasonal_components: Vec<Vec<f64>>,
    /// Periods matching `seasonal_components`.
    pub periods: Vec<usize>,
    pub remainder: Vec<f64>,
}

fn next_odd(x: f64) -> usize {
    let v = x.ceil() as usize;
    if v % 2 == 0 {
        v + 1
    } else {
        v
    }
}

/// Local polynomial estimate at position `xs` (1-based) using observations
/// `nleft..=nright`. Writes the normalised smoothing weights into `w` and
/// returns `None` when every weight vanishes.
#[allow(clippy::too_many_arguments)]
fn est(y: &[f64], len: usize, ideg: usize, xs: f64, nleft: usize, nright: usize, w: &mut [f64]) -> Option<f64> {
    let n = y.len();
    let range = n as f64 - 1.0;
    let mut h = (xs - nleft as f64).max(nright as f64 - xs);
    if len > n {
        h += ((len - n) / 2) as f64;
    }
    let h9 = 0.999 * h;
    let h1 = 0.001 * h;
    let mut a = 0.0;
    for j in nleft..=nright {
        let r = (j as f64 - xs).abs();
        w[j - 1] = if r <= h9 {
            if r <= h1 {
                1.0
            } else {
                let q = r / h;
                let t = 1.0 - q * q * q;
                t * t * t
            }
        } else {
            0.0
        };
        a += w[j - 1];
    }
    if a <= 0.0 {
        return None;
    }
    for j in nleft..=nright {
        w[j - 1] /= a;
    }
    if h > 0.0 && ideg > 0 {
        let a: f64 = (nleft..=nright).map(|j| w[j - 1] * j as f64).sum();
        let mut b = xs - a;
        let c: f64 = (nleft..=nright).map(|j| w[j - 1] * (j as f64 - a).powi(2)).sum();
        if c.sqrt() > 0.001 * range {
            b /= c;
            for j in nleft..=nright {
                w[j - 1] *= b * (j as f64 - a) + 1.0;
            }
        }
    }
    Some((nleft..=nright).map(|j| w[j - 1] * y[j - 1]).sum())
}

/// Loess smoother with span `len`, degree `ideg` and evaluation stride
/// `njump` (linear interpolation in between).
fn ess(y: &[f64], len: usize, ideg: usize, njump: usize) -> Vec<f64> {
    let n = y.len();
    let mut ys = vec![0.0; n];
    if n < 2 {
        ys[0] = y[0];
        return ys;
    }
    let mut w = vec![0.0; n];
    let newnj = njump.min(n - 1).max(1);
    let mut nleft = 1;
    let mut nright = n;
    if len >= n {
        let mut i = 1;
        while i <= n {
            ys[i - 1] = est(y, len, ideg, i as f64, 1, n, &mut w).unwrap_or(y[i - 1]);
            i += newnj;
        }
    } else if newnj == 1 {
        let nsh = (len + 1) / 2;
        nright = len;
        for i in 1..=n {
            if i > nsh && nright != n {
                nleft += 1;
                nright += 1;
            }
            ys[i - 1] = est(y, len, ideg, i as f64, nleft, nright, &mut w).unwrap_or(y[i - 1]);
        }
    } else {
        let nsh = (len + 1) / 2;
        let mut i = 1;
        while i <= n {
            if i < nsh {
                nleft = 1;
                nright = len;
            } else if i >= n - nsh + 1 {
                nleft = n - len + 1;
                nright = n;
            } else {
                nleft = i - nsh + 1;
                nright = len + i - nsh;
            }
            ys[i - 1] = est(y, len, ideg, i as f64, nleft, nright, &mut w).unwrap_or(y[i - 1]);
            i += newnj;
        }
    }
    if newnj != 1 {
        let mut i = 1;
        while i + newnj <= n {
            let delta = (ys[i + newnj - 1] - ys[i - 1]) / newnj as f64;
            for j in i + 1..i + newnj {
                ys[j - 1] = ys[i - 1] + delta * (j - i) as f64;
            }
            i += newnj;
        }
        let k = ((n - 1) / newnj) * newnj + 1;
        if k != n {
            ys[n - 1] = est(y, len, ideg, n as f64, nleft, nright, &mut w).unwrap_or(y[n - 1]);
            if k != n - 1 {
                let delta = (ys[n - 1] - ys[k - 1]) / (n - k) as f64;
                for j in k + 1..n {
                    ys[j - 1] = ys[k - 1] + delta * (j - k) as f64;
                }
            }
        }
    }
    ys
}

/// Smooths each cycle-subseries and extends it one period at both ends.
fn cycle_subseries(y: &[f64], np: usize, ns: usize, isdeg: usize, nsjump: usize) -> Vec<f64> {
    let n = y.len();
    let mut season = vec![0.0; n + 2 * np];
    for j in 1..=np {
        let k = (n - j) / np + 1;
        let sub: Vec<f64> = (0..k).map(|i| y[i * np + j - 1]).collect();
        let mut work2 = vec![0.0; k + 2];
        let sm = ess(&sub, ns, isdeg, nsjump);
        work2[1..=k].copy_from_slice(&sm);
        let mut w = vec![0.0; k];
        let nright = ns.min(k);
        work2[0] = est(&sub, ns, isdeg, 0.0, 1, nright, &mut w).unwrap_or(work2[1]);
        let nleft = if k + 1 > ns { k - ns + 1 } else { 1 };
        work2[k + 1] = est(&sub, ns, isdeg, (k + 1) as f64, nleft, k, &mut w).unwrap_or(work2[k]);
        for (m, v) in work2.iter().enumerate() {
            season[m * np + j - 1] = *v;
        }
    }
    season
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let newn = x.len() - len + 1;
    let flen = len as f64;
    let mut out = Vec::with_capacity(newn);
    let mut v: f64 = x[..len].iter().sum();
    out.push(v / flen);
    for j in 1..newn {
        v = v - x[j - 1] + x[j + len - 1];
        out.push(v / flen);
    }
    out
}

/// Single-period STL without robustness iterations. Returns
/// `(seasonal, trend)`.
pub fn stl(y: &[f64], np: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if np < 2 || n < 2 * np + 1 {
        return Err(Error::TooShort { need: 2 * np + 1, got: n });
    }
    let ns = SEASONAL_WINDOW;
    let nt = next_odd(1.5 * np as f64 / (1.0 - 1.5 / ns as f64));
    let nl = next_odd(np as f64);
    let (isdeg, itdeg, ildeg) = (0, 1, 1);
    let jump = |len: usize| (len as f64 / 10.0).ceil() as usize;
    let (nsjump, ntjump, nljump) = (jump(ns), jump(nt), jump(nl));

    let mut trend = vec![0.0; n];
    let mut season = vec![0.0; n];
    for _ in 0..2 {
        let detrended: Vec<f64> = y.iter().zip(&trend).map(|(a, b)| a - b).collect();
        let c = cycle_subseries(&detrended, np, ns, isdeg, nsjump);
        let f = moving_average(&moving_average(&moving_average(&c, np), np), 3);
        let low = ess(&f, nl, ildeg, nljump);
        for i in 0..n {
            season[i] = c[np + i] - low[i];
        }
        let deseason: Vec<f64> = y.iter().zip(&season).map(|(a, b)| a - b).collect();
        trend = ess(&deseason, nt, itdeg, ntjump);
    }
    Ok((season, trend))
}

/// Candidate spans (fractions of the series length) for the non-seasonal
/// trend smoother.
pub const SPAN_GRID: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

/// Local-linear tricube smoother at every point with `k` nearest
/// neighbours; returns the fit and the diagonal of the smoother matrix.
fn local_linear(y: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let k = k.min(n);
    let nsh = (k + 1) / 2;
    let mut fit = vec![0.0; n];
    let mut hat = vec![0.0; n];
    let mut w = vec![0.0; n];
    let (mut nleft, mut nright) = (1, k);
    for i in 1..=n {
        if i > nsh && nright != n {
            nleft += 1;
            nright += 1;
        }
        match est(y, k, 1, i as f64, nleft, nright, &mut w) {
            Some(v) => {
                fit[i - 1] = v;
                hat[i - 1] = w[i - 1];
            }
            None => {
                fit[i - 1] = y[i - 1];
                hat[i - 1] = 1.0;
            }
        }
    }
    (fit, hat)
}

/// Non-seasonal trend by local-linear regression, span chosen by
/// generalised cross-validation over [`SPAN_GRID`].
pub fn smooth_trend(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for f in SPAN_GRID {
        let k = ((f * n).round() as usize).max(5);
        let (fit, hat) = local_linear(y, k);
        let ssr: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
        let tr: f64 = hat.iter().sum();
        let denom = (1.0 - tr / n).powi(2);
        let gcv = if denom > 0.0 { ssr / n / denom } else { f64::INFINITY };
        if best.as_ref().is_none_or(|(g, _)| gcv < *g) {
            best = Some((gcv, fit));
        }
    }
    best.map(|(_, f)| f).unwrap_or_else(|| y.to_vec())
}

/// Minimum length for a period to take part in the decomposition.
pub fn min_length_for_period(p: usize) -> usize {
    2 * p + 4
}

/// Trend + seasonal components + remainder for one or more periods.
///
/// Periods of 1, or too long for the series, are left out; when none
/// remain, the trend comes from [`smooth_trend`].
pub fn stl_decompose_multi(x: &[f64], periods: &[usize]) -> Result<STLDecomposition> {
    let n = x.len();
    let mut ps: Vec<usize> = periods
        .iter()
        .copied()
        .filter(|p| *p > 1 && n >= min_length_for_period(*p))
        .collect();
    ps.sort_unstable();
    ps.dedup();
    if ps.is_empty() {
        if n < 8 {
            return Err(Error::TooShort { need: 8, got: n });
        }
        let trend = smooth_trend(x);
        let remainder = x.iter().zip(&trend).map(|(a, b)| a - b).collect();
        return Ok(STLDecomposition { trend, seasonal_components: vec![], periods: vec![], remainder });
    }
    let mut seas = vec![vec![0.0; n]; ps.len()];
    let mut trend = vec![0.0; n];
    let sweeps = if ps.len() == 1 { 1 } else { SWEEPS };
    for _ in 0..sweeps {
        for i in 0..ps.len() {
            let adj: Vec<f64> = (0..n)
                .map(|t| x[t] - (0..ps.len()).filter(|j| *j != i).map(|j| seas[j][t]).sum::<f64>())
                .collect();
            let (s, tr) = stl(&adj, ps[i])?;
            seas[i] = s;
            trend = tr;
        }
    }
    let remainder = (0..n)
        .map(|t| x[t] - trend[t] - seas.iter().map(|s| s[t]).sum::<f64>())
        .collect();
    Ok(STLDecomposition { trend, seasonal_components: seas, periods: ps, remainder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let ma = crate::stats::mean(a);
        let mb = crate::stats::mean(b);
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        num / (da * db).sqrt()
    }

    #[test]
    fn moving_average_lengths() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
    }

    #[test]
    fn loess_reproduces_lines() {
        let y: Vec<f64> = (0..40).map(|t| 3.0 - 0.5 * t as f64).collect();
        for jump in [1, 3] {
            let s = ess(&y, 11, 1, jump);
            for (a, b) in s.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn recovers_sinusoid() {
        let mut r = stream(1, &[]);
        let n = 240;
        let s: Vec<f64> = (0..n).map(|t| (2.0 * PI * t as f64 / 12.0).sin()).collect();
        let x: Vec<f64> = (0..n)
            .map(|t| 0.02 * t as f64 + s[t] + 0.2 * r.sample::<f64, _>(StandardNormal))
            .collect();
        let d = stl_decompose_multi(&x, &[12]).unwrap();
        assert!(corr(&d.seasonal_components[0], &s) > 0.99);
    }

    #[test]
    fn recovers_two_periods() {
        let mut r = stream(2, &[]);
        let n = 168 * 8;
        let s1: Vec<f64> = (0..n).map(|t| (2.0 * PI * t as f64 / 24.0).sin()).collect();
        let s2: Vec<f64> = (0..n).map(|t| (2.0 * PI * t as f64 / 168.0).cos()).collect();
        let x: Vec<f64> = (0..n)
            .map(|t| s1[t] + s2[t] + 0.1 * r.sample::<f64, _>(StandardNormal))
            .collect();
        let d = stl_decompose_multi(&x, &[24, 168]).unwrap();
        assert_eq!(d.periods, vec![24, 168]);
        assert!(corr(&d.seasonal_components[0], &s1) > 0.95);
        assert!(corr(&d.seasonal_components[1], &s2) > 0.95);
        for t in 0..n {
            let back = d.trend[t] + d.seasonal_components[0][t] + d.seasonal_components[1][t] + d.remainder[t];
            assert!((back - x[t]).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_series() {
        let d = stl_decompose_multi(&[4.0; 50], &[1]).unwrap();
        assert!(d.trend.iter().all(|v| (v - 4.0).abs() < 1e-9));
        assert!(d.remainder.iter().all(|v| v.abs() < 1e-9));
        let d = stl_decompose_multi(&[4.0; 50], &[4]).unwrap();
        assert!(d.remainder.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn short_periods_are_dropped() {
        let x: Vec<f64> = (0..30).map(|t| (t as f64).sin()).collect();
        let d = stl_decompose_multi(&x, &[12, 52]).unwrap();
        assert_eq!(d.periods, vec![12]);
    }

    #[test]
    fn gcv_prefers_wide_span_for_noise() {
        let mut r = stream(3, &[]);
        let x: Vec<f64> = (0..400).map(|_| r.sample(StandardNormal)).collect();
        let tr = smooth_trend(&x);
        assert!(crate::stats::variance(&tr) < 0.1);
    }
}
