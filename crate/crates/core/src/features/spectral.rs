//! Periodogram-based features: spectral entropy and the long-memory
//! coefficient.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::stats::mean;

/// Raw periodogram `|sum x_t e^{-i w_j t}|^2 / n` at `w_j = 2 pi j / n` for
/// `j = 1..=n/2`, after removing the mean.
pub fn periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (1..=n / 2).map(|j| buf[j].norm_sqr() / n as f64).collect()
}

/// One circular pass of the modified Daniell kernel with half-width `m`.
fn daniell(x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len() as isize;
    let w_end = 1.0 / (4.0 * m as f64);
    let w_mid = 1.0 / (2.0 * m as f64);
    (0..n)
        .map(|i| {
            (-(m as isize)..=m as isize)
                .map(|k| {
                    let w = if k.unsigned_abs() == m { w_end } else { w_mid };
                    w * x[(i + k).rem_euclid(n) as usize]
                })
                .sum()
        })
        .collect()
}

/// Spans of the two smoothing passes applied before taking the entropy.
pub const ENTROPY_SPANS: [usize; 2] = [3, 3];

/// Normalised Shannon entropy of the smoothed spectral density, in (0, 1].
pub fn spectral_entropy(x: &[f64]) -> Result<f64> {
    if x.len() < 16 {
        return Err(Error::TooShort { need: 16, got: x.len() });
    }
    let mut f = periodogram(x);
    for span in ENTROPY_SPANS {
        f = daniell(&f, span / 2);
    }
    let total: f64 = f.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let h: f64 = f
        .iter()
        .map(|v| v / total)
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok((h / (f.len() as f64).ln()).clamp(f64::MIN_POSITIVE, 1.0))
}

fn whittle_objective(d: f64, lam: &[f64], per: &[f64]) -> f64 {
    let mut ratio = 0.0;
    let mut logg = 0.0;
    for (l, i) in lam.iter().zip(per) {
        let lg = -2.0 * d * (2.0 * (l / 2.0).sin()).abs().ln();
        ratio += i / lg.exp();
        logg += lg;
    }
    let m = lam.len() as f64;
    (ratio / m).ln() + logg / m
}

/// Whittle estimate of the fractional differencing order on `[0, 0.5]`.
pub fn fractional_d(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 32 {
        return Err(Error::TooShort { need: 32, got: n });
    }
    let per = periodogram(x);
    let m = (n - 1) / 2;
    let per = &per[..m];
    if per.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let lam: Vec<f64> = (1..=m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64).collect();
    let q = |d: f64| whittle_objective(d, &lam, per);

    let steps = 50;
    let mut best = 0;
    let mut best_q = f64::INFINITY;
    for k in 0..=steps {
        let v = q(0.5 * k as f64 / steps as f64);
        if v < best_q {
            best_q = v;
            best = k;
        }
    }
    let h = 0.5 / steps as f64;
    let (mut a, mut b) = (
        (best as f64 * h - h).max(0.0),
        (best as f64 * h + h).min(0.5),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut qc, mut qe) = (q(c), q(e));
    while b - a > 1e-8 {
        if qc < qe {
            b = e;
            e = c;
            qe = qc;
            c = b - g * (b - a);
            qc = q(c);
        } else {
            a = c;
            c = e;
            qc = qe;
            e = a + g * (b - a);
            qe = q(e);
        }
    }
    let mid = 0.5 * (a + b);
    // keep the better of the refined point and the grid optimum
    let d = if q(mid) <= best_q { mid } else { best as f64 * h };
    Ok(d.clamp(0.0, 0.5))
}

/// Long-memory coefficient `0.5 + d`, in [0.5, 1].
pub fn hurst(x: &[f64]) -> Result<f64> {
    Ok((0.5 + fractional_d(x)?).clamp(0.5, 1.0))
}
