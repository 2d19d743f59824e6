//! The scoped forecaster bank and MASE.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::stl::stl;
use crate::regress::ols;
use crate::series::TimeSeries;
use crate::stats::mean;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    Naive,
    Snaive,
    RwDrift,
    Theta,
    Mean,
    Ar,
}

impl ForecastMethod {
    /// Canonical order, also used to break selection ties.
    pub const ALL: [ForecastMethod; 6] = [
        ForecastMethod::Naive,
        ForecastMethod::Snaive,
        ForecastMethod::RwDrift,
        ForecastMethod::Theta,
        ForecastMethod::Mean,
        ForecastMethod::Ar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ForecastMethod::Naive => "naive",
            ForecastMethod::Snaive => "snaive",
            ForecastMethod::RwDrift => "rw_drift",
            ForecastMethod::Theta => "theta",
            ForecastMethod::Mean => "mean",
            ForecastMethod::Ar => "ar",
        }
    }
}

impl fmt::Display for ForecastMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForecastMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ForecastMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown forecast method `{s}`")))
    }
}

/// Forecasts `h` steps ahead from `train`, using its largest period.
pub fn forecast(method: ForecastMethod, train: &TimeSeries, h: usize) -> Result<Vec<f64>> {
    forecast_values(method, &train.values, train.max_period(), h)
}

pub fn forecast_values(method: ForecastMethod, y: &[f64], period: usize, h: usize) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 3 {
        return Err(Error::TooShort { need: 3, got: n });
    }
    if h == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let last = y[n - 1];
    Ok(match method {
        ForecastMethod::Naive => vec![last; h],
        ForecastMethod::Snaive => {
            if period <= 1 || n < period {
                vec![last; h]
            } else {
                (0..h).map(|j| y[n - period + j % period]).collect()
            }
        }
        ForecastMethod::RwDrift => {
            let drift = (last - y[0]) / (n - 1) as f64;
            (1..=h).map(|j| last + j as f64 * drift).collect()
        }
        ForecastMethod::Mean => vec![mean(y); h],
        ForecastMethod::Ar => ar_forecast(y, h),
        ForecastMethod::Theta => theta_forecast(y, period, h),
    })
}

/// Least-squares AR(p) with intercept; p minimises AIC over
/// `0..=min(10, n/5)` on a common estimation sample.
fn ar_forecast(y: &[f64], h: usize) -> Vec<f64> {
    let n = y.len();
    let pmax = (n / 5).min(10);
    let rows = n - pmax;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in 0..=pmax {
        let x = DMatrix::from_fn(rows, p + 1, |i, j| if j == 0 { 1.0 } else { y[pmax + i - j] });
        let Ok(fit) = ols(&x, &y[pmax..]) else { continue };
        let aic = rows as f64 * (fit.ssr.max(1e-300) / rows as f64).ln() + 2.0 * (p + 1) as f64;
        if best.as_ref().is_none_or(|(a, _)| aic < *a) {
            best = Some((aic, fit.coef));
        }
    }
    let coef = best.map(|b| b.1).unwrap_or_else(|| vec![mean(y)]);
    let mut path = y.to_vec();
    for _ in 0..h {
        let t = path.len();
        let v = coef[0] + (1..coef.len()).map(|j| coef[j] * path[t - j]).sum::<f64>();
        path.push(v);
    }
    path.split_off(n)
}

/// Simple exponential smoothing; returns the final level and the one-step
/// SSE for the given smoothing weight.
fn ses(y: &[f64], alpha: f64) -> (f64, f64) {
    let mut level = y[0];
    let mut sse = 0.0;
    for v in &y[1..] {
        let e = v - level;
        sse += e * e;
        level += alpha * e;
    }
    (level, sse)
}

fn theta_forecast(y: &[f64], period: usize, h: usize) -> Vec<f64> {
    let n = y.len();
    let seasonal = if period > 1 && n >= 2 * period + 1 { stl(y, period).ok().map(|s| s.0) } else { None };
    let adj: Vec<f64> = match &seasonal {
        Some(s) => y.iter().zip(s).map(|(a, b)| a - b).collect(),
        None => y.to_vec(),
    };
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..100 {
        let alpha = k as f64 / 100.0;
        let (level, sse) = ses(&adj, alpha);
        if sse < best.0 {
            best = (sse, level);
        }
    }
    let tbar = (n as f64 + 1.0) / 2.0;
    let ybar = mean(&adj);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in adj.iter().enumerate() {
        let dt = i as f64 + 1.0 - tbar;
        sxy += dt * (v - ybar);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (1..=h)
        .map(|j| {
            let s = seasonal.as_ref().map_or(0.0, |s| s[n - period + (j - 1) % period]);
            best.1 + 0.5 * slope * j as f64 + s
        })
        .collect()
}

/// Mean absolute error of `forecasts` scaled by the in-sample mean absolute
/// lag-`period` difference.
pub fn mase(actuals: &[f64], forecasts: &[f64], insample: &[f64], period: usize) -> Result<f64> {
    let m = period.max(1);
    if insample.len() <= m {
        return Err(Error::TooShort { need: m + 1, got: insample.len() });
    }
    if actuals.len() != forecasts.len() || actuals.is_empty() {
        return Err(Error::InvalidConfig("actuals and forecasts must have the same nonzero length".into()));
    }
    let scale = insample.windows(m + 1).map(|w| (w[m] - w[0]).abs()).sum::<f64>() / (insample.len() - m) as f64;
    if !(scale > 0.0) {
        return Err(Error::ZeroScale);
    }
    let mae = actuals.iter().zip(forecasts).map(|(a, f)| (a - f).abs()).sum::<f64>() / actuals.len() as f64;
    Ok(mae / scale)
}
