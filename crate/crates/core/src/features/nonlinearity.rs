use crate::error::{Error, Result};
use crate::regress::{design_with_intercept, ols};

/// Terasvirta-type nonlinearity coefficient `log(SSE0 / SSE1)` with lag 1,
/// where SSE0 comes from the linear autoregression and SSE1 from regressing
/// its residuals on the cubic expansion of the lagged value.
pub fn nonlinearity(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 20 {
        return Err(Error::TooShort { need: 20, got: n });
    }
    // The statistic is affine invariant; standardizing keeps the powers tame.
    let z = crate::stats::standardize(x)?;
    let y = &z[1..];
    let lag: Vec<f64> = z[..n - 1].to_vec();
    let t = y.len();
    let linear = ols(&design_with_intercept(t, &[lag.clone()]), y)?;
    let sq: Vec<f64> = lag.iter().map(|v| v * v).collect();
    let cu: Vec<f64> = lag.iter().map(|v| v * v * v).collect();
    let aug = ols(&design_with_intercept(t, &[lag, sq, cu]), &linear.residuals)?;
    if !(linear.ssr > 0.0) || !(aug.ssr > 0.0) {
        return Ok(0.0);
    }
    Ok((linear.ssr / aug.ssr).ln().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn linear_vs_quadratic() {
        let mut r = stream(1, &[]);
        let mut x = vec![0.0; 2000];
        for t in 1..2000 {
            x[t] = 0.6 * x[t - 1] + r.sample::<f64, _>(StandardNormal);
        }
        assert!(nonlinearity(&x).unwrap() < 0.02);

        let mut y: Vec<f64> = vec![0.0; 2000];
        for t in 1..2000 {
            let e: f64 = r.sample(StandardNormal);
            y[t] = (0.5 * y[t - 1] * y[t - 1]).min(5.0) + 0.5 * e;
        }
        let v = nonlinearity(&y).unwrap();
        assert!(v > 0.1, "{v}");
    }

    #[test]
    fn affine_invariance() {
        let mut r = stream(2, &[]);
        let x: Vec<f64> = (0..300).map(|_| r.sample::<f64, _>(StandardNormal).powi(3)).collect();
        let y: Vec<f64> = x.iter().map(|v| 37.0 * v - 5.0).collect();
        assert!((nonlinearity(&x).unwrap() - nonlinearity(&y).unwrap()).abs() < 1e-8);
    }
}
