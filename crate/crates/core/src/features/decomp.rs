//! Strength, spikiness and shape features of an STL decomposition.

use crate::error::Result;
use crate::features::stl::{stl_decompose_multi, STLDecomposition};
use crate::stats::{acf, mean, variance};

#[derive(Clone, Debug, PartialEq)]
pub struct StlFeatures {
    pub trend: f64,
    /// One strength per requested seasonal period (0 for dropped periods).
    pub seasonal_strength: Vec<f64>,
    pub peak: f64,
    pub trough: f64,
    pub spike: f64,
    pub linearity: f64,
    pub curvature: f64,
    pub e_acf1: Option<f64>,
    pub e_acf10: Option<f64>,
}

fn strength(e: &[f64], comp: &[f64]) -> f64 {
    let sum: Vec<f64> = comp.iter().zip(e).map(|(a, b)| a + b).collect();
    let vs = variance(&sum);
    if !(vs > 0.0) {
        return 0.0;
    }
    (1.0 - variance(e) / vs).clamp(0.0, 1.0)
}

/// Variance of the leave-one-out variances.
pub fn spikiness(e: &[f64]) -> f64 {
    let n = e.len() as f64;
    if n < 4.0 {
        return 0.0;
    }
    let m = mean(e);
    let v = variance(e);
    let loo: Vec<f64> = e.iter().map(|x| (v * (n - 1.0) - (x - m).powi(2) * n / (n - 1.0)) / (n - 2.0)).collect();
    variance(&loo)
}

/// Orthonormal linear and quadratic polynomial bases on `1..=n`, oriented so
/// the linear term increases and the quadratic term is convex.
pub fn orthonormal_quadratic(n: usize) -> (Vec<f64>, Vec<f64>) {
    let t: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let tm = mean(&t);
    let mut p1: Vec<f64> = t.iter().map(|v| v - tm).collect();
    let n1 = p1.iter().map(|v| v * v).sum::<f64>().sqrt();
    p1.iter_mut().for_each(|v| *v /= n1);
    let sq: Vec<f64> = t.iter().map(|v| (v - tm) * (v - tm)).collect();
    let sm = mean(&sq);
    let proj: f64 = sq.iter().zip(&p1).map(|(a, b)| a * b).sum();
    let mut p2: Vec<f64> = sq.iter().zip(&p1).map(|(a, b)| a - sm - proj * b).collect();
    let n2 = p2.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n2 > 0.0 {
        p2.iter_mut().for_each(|v| *v /= n2);
    }
    (p1, p2)
}

fn cycle_position(comp: &[f64], period: usize, want_max: bool) -> f64 {
    let mut best = 0;
    for (i, v) in comp.iter().enumerate() {
        let better = if want_max { *v > comp[best] } else { *v < comp[best] };
        if better {
            best = i;
        }
    }
    (best % period + 1) as f64
}

/// Features of a finished decomposition. `periods` lists every requested
/// seasonal period so dropped ones still get a strength of 0.
pub fn features_from_decomposition(d: &STLDecomposition, periods: &[usize]) -> StlFeatures {
    let e = &d.remainder;
    let requested: Vec<usize> = periods.iter().copied().filter(|p| *p > 1).collect();
    let seasonal_strength = if requested.is_empty() {
        vec![0.0]
    } else {
        requested
            .iter()
            .map(|p| match d.periods.iter().position(|q| q == p) {
                Some(i) => strength(e, &d.seasonal_components[i]),
                None => 0.0,
            })
            .collect()
    };
    let (peak, trough) = match (d.periods.last(), d.seasonal_components.last()) {
        (Some(&p), Some(s)) => (cycle_position(s, p, true), cycle_position(s, p, false)),
        _ => (0.0, 0.0),
    };
    let (p1, p2) = orthonormal_quadratic(d.trend.len());
    let linearity = p1.iter().zip(&d.trend).map(|(a, b)| a * b).sum();
    let curvature = p2.iter().zip(&d.trend).map(|(a, b)| a * b).sum();
    let r = acf(e, 10);
    StlFeatures {
        trend: strength(e, &d.trend),
        seasonal_strength,
        peak,
        trough,
        spike: spikiness(e),
        linearity,
        curvature,
        e_acf1: r.as_ref().map(|v| v[0]),
        e_acf10: r.as_ref().map(|v| v.iter().map(|a| a * a).sum()),
    }
}

/// Decomposes `x` and derives the STL features.
pub fn stl_feature_set(x: &[f64], periods: &[usize]) -> Result<StlFeatures> {
    let d = stl_decompose_multi(x, periods)?;
    Ok(features_from_decomposition(&d, periods))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::standardize;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut r = stream(seed, &[]);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn spikiness_matches_brute_force() {
        let e = noise(1, 30);
        let loo: Vec<f64> = (0..30)
            .map(|i| {
                let rest: Vec<f64> = e.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                variance(&rest)
            })
            .collect();
        assert!((spikiness(&e) - variance(&loo)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_basis_is_orthonormal() {
        let (p1, p2) = orthonormal_quadratic(17);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&p1, &p1) - 1.0).abs() < 1e-12);
        assert!((dot(&p2, &p2) - 1.0).abs() < 1e-12);
        assert!(dot(&p1, &p2).abs() < 1e-12);
        assert!(p1.iter().sum::<f64>().abs() < 1e-12 && p2.iter().sum::<f64>().abs() < 1e-12);
        assert!(p1[16] > p1[0] && p2[0] > 0.0 && p2[8] < 0.0);
    }

    #[test]
    fn linear_trend_is_strong() {
        let e = noise(2, 200);
        let x: Vec<f64> = (0..200).map(|t| t as f64 + 0.2 * e[t]).collect();
        let f = stl_feature_set(&standardize(&x).unwrap(), &[1]).unwrap();
        assert!(f.trend > 0.99, "{f:?}");
        assert_eq!(f.seasonal_strength, vec![0.0]);
        assert!(f.linearity > 0.0);
    }

    #[test]
    fn noise_has_weak_trend() {
        let f = stl_feature_set(&noise(3, 500), &[1]).unwrap();
        assert!(f.trend < 0.2, "{f:?}");
        assert!(f.spike < 1e-3);
    }

    #[test]
    fn sinusoid_is_seasonal() {
        let e = noise(4, 240);
        let x: Vec<f64> = (0..240).map(|t| (2.0 * PI * t as f64 / 12.0).sin() + 0.01 * e[t]).collect();
        let f = stl_feature_set(&x, &[12]).unwrap();
        assert!(f.seasonal_strength[0] > 0.99, "{f:?}");
        // sin peaks at t = 3 within each cycle (1-based position 4)
        assert_eq!(f.peak, 4.0);
        assert_eq!(f.trough, 10.0);
    }
}
