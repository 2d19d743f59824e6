//! Mixture autoregressive models: expansion to AR form, conditional moments
//! and simulation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude beyond which a simulated path is treated as explosive.
pub const EXPLOSION_BOUND: f64 = 1e30;

/// A seasonal ARIMA(p,d,0)(P,D,0)_period component with Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonalARComponent {
    pub ar_coeffs: Vec<f64>,
    pub seasonal_ar_coeffs: Vec<f64>,
    pub d: u32,
    #[serde(rename = "D")]
    pub seasonal_d: u32,
    pub period: usize,
    pub intercept: f64,
    pub sigma: f64,
}

impl SeasonalARComponent {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.period == 0 {
            return Err(Error::InvalidModel("period must be at least 1".into()));
        }
        if self.period == 1 && (!self.seasonal_ar_coeffs.is_empty() || self.seasonal_d != 0) {
            return Err(Error::InvalidModel(
                "a period-1 component cannot carry seasonal terms".into(),
            ));
        }
        if self.d > 2 || self.seasonal_d > 1 {
            return Err(Error::InvalidModel(format!(
                "difference orders d={} D={} exceed the caps 2 and 1",
                self.d, self.seasonal_d
            )));
        }
        let finite = self
            .ar_coeffs
            .iter()
            .chain(&self.seasonal_ar_coeffs)
            .chain(std::iter::once(&self.intercept))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Coefficients `a_1..a_q` of the equivalent pure AR recursion
    /// `x_t = intercept + sum a_i x_{t-i} + sigma e_t`.
    pub fn expand(&self) -> Vec<f64> {
        expand_component_to_ar(self)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Multiplies out the lag polynomials of `c` and returns the AR coefficients.
pub fn expand_component_to_ar(c: &SeasonalARComponent) -> Vec<f64> {
    let s = c.period;
    let mut poly = vec![1.0];

    let mut ar = vec![1.0];
    ar.extend(c.ar_coeffs.iter().map(|v| -v));
    poly = poly_mul(&poly, &ar);

    if !c.seasonal_ar_coeffs.is_empty() {
        let mut sar = vec![0.0; c.seasonal_ar_coeffs.len() * s + 1];
        sar[0] = 1.0;
        for (j, v) in c.seasonal_ar_coeffs.iter().enumerate() {
            sar[(j + 1) * s] = -v;
        }
        poly = poly_mul(&poly, &sar);
    }
    for _ in 0..c.d {
        poly = poly_mul(&poly, &[1.0, -1.0]);
    }
    for _ in 0..c.seasonal_d {
        let mut sd = vec![0.0; s + 1];
        sd[0] = 1.0;
        sd[s] = -1.0;
        poly = poly_mul(&poly, &sd);
    }
    poly[1..].iter().map(|v| -v).collect()
}

/// A K-component mixture of seasonal AR processes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MARModel {
    pub components: Vec<SeasonalARComponent>,
    pub weights: Vec<f64>,
}

impl MARModel {
    pub fn new(components: Vec<SeasonalARComponent>, weights: Vec<f64>) -> Result<Self> {
        let m = MARModel { components, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidModel("a model needs at least one component".into()));
        }
        if self.components.len() != self.weights.len() {
            return Err(Error::InvalidModel(format!(
                "{} components but {} weights",
                self.components.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidModel("weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        let period = self.components[0].period;
        for c in &self.components {
            c.validate()?;
            if c.period != period {
                return Err(Error::InvalidModel("components disagree on the period".into()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn period(&self) -> usize {
        self.components[0].period
    }

    /// Longest expanded lag over all components.
    pub fn max_lag(&self) -> usize {
        self.components
            .iter()
            .map(|c| {
                c.ar_coeffs.len()
                    + c.seasonal_ar_coeffs.len() * c.period
                    + c.d as usize
                    + c.seasonal_d as usize * c.period
            })
            .max()
            .unwrap_or(0)
    }

    /// Burn-in length used for this model's period.
    pub fn default_burn_in(&self) -> usize {
        self.period() * 10
    }
}

fn component_mean(intercept: f64, a: &[f64], history: &[f64]) -> f64 {
    let n = history.len();
    intercept + a.iter().enumerate().map(|(i, ai)| ai * history[n - 1 - i]).sum::<f64>()
}

/// Per-component conditional means given `history` (most recent value last).
pub fn component_means(m: &MARModel, history: &[f64]) -> Result<Vec<f64>> {
    let need = m.max_lag();
    if history.len() < need {
        return Err(Error::InsufficientHistory { need, got: history.len() });
    }
    Ok(m.components
        .iter()
        .map(|c| component_mean(c.intercept, &c.expand(), history))
        .collect())
}

/// One-step conditional mean and variance of the mixture.
pub fn conditional_moments(m: &MARModel, history: &[f64]) -> Result<(f64, f64)> {
    let mu = component_means(m, history)?;
    let mean: f64 = m.weights.iter().zip(&mu).map(|(a, u)| a * u).sum();
    let within: f64 = m.weights.iter().zip(&m.components).map(|(a, c)| a * c.sigma * c.sigma).sum();
    let between: f64 = m.weights.iter().zip(&mu).map(|(a, u)| a * u * u).sum::<f64>() - mean * mean;
    Ok((mean, within + between))
}

fn gaussian_central_moment(sigma: f64, i: u32) -> f64 {
    if i % 2 == 1 {
        return 0.0;
    }
    // sigma^i (i-1)!!
    let mut df = 1.0;
    let mut k = i as i64 - 1;
    while k > 1 {
        df *= k as f64;
        k -= 2;
    }
    sigma.powi(i as i32) * df
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `order`-th central moment of the one-step conditional distribution.
pub fn conditional_central_moment(m: &MARModel, history: &[f64], order: u32) -> Result<f64> {
    if order == 0 || order > 6 {
        return Err(Error::InvalidConfig(format!("moment order {order} outside 1..=6")));
    }
    let mu = component_means(m, history)?;
    let mean: f64 = m.weights.iter().zip(&mu).map(|(a, u)| a * u).sum();
    let mut total = 0.0;
    for ((alpha, c), uk) in m.weights.iter().zip(&m.components).zip(&mu) {
        let shift = uk - mean;
        let mut inner = 0.0;
        for i in 0..=order {
            inner += binom(order, i) * gaussian_central_moment(c.sigma, i) * shift.powi((order - i) as i32);
        }
        total += alpha * inner;
    }
    Ok(total)
}

/// Picks a component with one uniform draw against the cumulative weights.
pub(crate) fn pick_component(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1)
}

/// A model with its components expanded once, for repeated draws.
pub struct MarStepper<'a> {
    model: &'a MARModel,
    expanded: Vec<Vec<f64>>,
    cum: Vec<f64>,
}

impl<'a> MarStepper<'a> {
    pub fn new(m: &'a MARModel) -> Self {
        let mut acc = 0.0;
        let cum = m.weights.iter().map(|w| {
            acc += w;
            acc
        });
        MarStepper { model: m, expanded: m.components.iter().map(|c| c.expand()).collect(), cum: cum.collect() }
    }

    /// Draws the next value after `history` (most recent last). The caller
    /// guarantees at least `max_lag` values of history.
    pub fn step<R: Rng + ?Sized>(&self, history: &[f64], rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = pick_component(&self.cum, u);
        let eps: f64 = rng.sample(StandardNormal);
        let c = &self.model.components[k];
        component_mean(c.intercept, &self.expanded[k], history) + c.sigma * eps
    }
}

/// Continues `history` by `n` simulated steps and returns the new values.
pub fn simulate_from<R: Rng + ?Sized>(m: &MARModel, history: &[f64], n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let lag = m.max_lag();
    if history.len() < lag {
        return Err(Error::InsufficientHistory { need: lag, got: history.len() });
    }
    let st = MarStepper::new(m);
    let mut x = history[history.len() - lag..].to_vec();
    for t in 0..n {
        let v = st.step(&x, rng);
        if !v.is_finite() || v.abs() > EXPLOSION_BOUND {
            return Err(Error::NonFiniteSample { step: t });
        }
        x.push(v);
    }
    Ok(x.split_off(lag))
}

/// Simulates `burn_in + n` steps from zero pre-sample values and returns the
/// last `n`.
pub fn simulate_mar<R: Rng + ?Sized>(
    m: &MARModel,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig("series length must be at least 1".into()));
    }
    let x = simulate_from(m, &vec![0.0; m.max_lag()], burn_in + n, rng)?;
    Ok(x[burn_in..].to_vec())
}
