use crate::error::{Error, Result};
use crate::stats::{acf, diff, pacf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcfFeatures {
    pub x_acf1: f64,
    pub x_acf10: f64,
    pub diff1_acf1: Option<f64>,
    pub diff1_acf10: Option<f64>,
    pub diff2_acf1: Option<f64>,
    pub diff2_acf10: Option<f64>,
    pub seas_acf1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacfFeatures {
    pub x_pacf5: f64,
    pub diff1_pacf5: Option<f64>,
    pub diff2_pacf5: Option<f64>,
    pub seas_pacf: f64,
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Lag-1 and summed squared first-10 autocorrelations of the series and its
/// first two differences, plus the autocorrelation at `period`.
///
/// A difference with zero variance leaves its entries absent.
pub fn acf_feature_set(x: &[f64], period: usize) -> Result<AcfFeatures> {
    if x.len() < 13 {
        return Err(Error::TooShort { need: 13, got: x.len() });
    }
    let r = acf(x, 10.max(period)).ok_or(Error::DegenerateSeries)?;
    let d1 = diff(x, 1);
    let d2 = diff(&d1, 1);
    let r1 = acf(&d1, 10);
    let r2 = acf(&d2, 10);
    Ok(AcfFeatures {
        x_acf1: r[0],
        x_acf10: sum_sq(&r[..10]),
        diff1_acf1: r1.as_ref().map(|v| v[0]),
        diff1_acf10: r1.as_ref().map(|v| sum_sq(v)),
        diff2_acf1: r2.as_ref().map(|v| v[0]),
        diff2_acf10: r2.as_ref().map(|v| sum_sq(v)),
        seas_acf1: if period > 1 { r[period - 1] } else { 0.0 },
    })
}

/// Summed squared first-5 partial autocorrelations of the series and its
/// differences, plus the partial autocorrelation at `period`.
pub fn pacf_feature_set(x: &[f64], period: usize) -> Result<PacfFeatures> {
    if x.len() < 13 {
        return Err(Error::TooShort { need: 13, got: x.len() });
    }
    let p = pacf(x, 5.max(period)).ok_or(Error::DegenerateSeries)?;
    let d1 = diff(x, 1);
    let d2 = diff(&d1, 1);
    let seas_pacf = if period > 1 && period < x.len() { p[period - 1] } else { 0.0 };
    Ok(PacfFeatures {
        x_pacf5: sum_sq(&p[..5]),
        diff1_pacf5: pacf(&d1, 5).map(|v| sum_sq(&v)),
        diff2_pacf5: pacf(&d2, 5).map(|v| sum_sq(&v)),
        seas_pacf,
    })
}
