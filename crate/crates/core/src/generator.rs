//! Random MAR model sampling and batch generation.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Exec};
use crate::mar::{simulate_mar, MARModel, SeasonalARComponent};
use crate::rng::{stream, StreamRng};
use crate::series::{SeriesMeta, TimeSeries};

/// Consecutive explosive draws tolerated before giving up on an item.
pub const MAX_RETRIES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthSampler {
    Fixed(usize),
    Pool(Vec<usize>),
}

impl LengthSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            LengthSampler::Fixed(n) => *n,
            LengthSampler::Pool(pool) => pool[rng.random_range(0..pool.len())],
        }
    }
}

/// Built-in representative lengths for a seasonal period.
pub fn default_length_pool(period: usize) -> Vec<usize> {
    match period {
        1 => vec![20, 30, 40],
        4 => vec![60, 90, 120],
        12 => vec![80, 200, 300],
        52 => vec![350, 900, 1600],
        p => vec![(6 * p).max(20), (10 * p).max(30), (14 * p).max(40)],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub period: usize,
    pub length_sampler: LengthSampler,
    pub k_max: usize,
    pub coefficient_sd: f64,
    pub sigma_log_mean: f64,
    pub sigma_log_sd: f64,
    pub p_d: f64,
    #[serde(rename = "p_D")]
    pub p_seasonal_d: f64,
    pub ar_order_max: usize,
    pub seasonal_ar_order_max: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::for_period(1)
    }
}

impl GeneratorConfig {
    pub fn for_period(period: usize) -> Self {
        GeneratorConfig {
            period,
            length_sampler: LengthSampler::Pool(default_length_pool(period)),
            k_max: 5,
            coefficient_sd: 0.5,
            sigma_log_mean: 0.1,
            sigma_log_sd: 0.1,
            p_d: 0.9,
            p_seasonal_d: 0.4,
            ar_order_max: 2,
            seasonal_ar_order_max: 1,
        }
    }

    pub fn with_length(mut self, n: usize) -> Self {
        self.length_sampler = LengthSampler::Fixed(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.period == 0 {
            return bad("period must be at least 1");
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1");
        }
        if !(self.coefficient_sd > 0.0 && self.coefficient_sd.is_finite()) {
            return bad("coefficient_sd must be positive");
        }
        if !(self.sigma_log_sd >= 0.0) || !self.sigma_log_mean.is_finite() {
            return bad("sigma log-normal parameters are invalid");
        }
        for p in [self.p_d, self.p_seasonal_d] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.ar_order_max == 0 {
            return bad("ar_order_max must be at least 1");
        }
        match &self.length_sampler {
            LengthSampler::Fixed(0) => return bad("length must be at least 1"),
            LengthSampler::Pool(p) if p.is_empty() || p.contains(&0) => {
                return bad("length pool must be nonempty with positive lengths")
            }
            _ => {}
        }
        Ok(())
    }
}

/// Draws one MAR model from the configured parameter distributions.
pub fn sample_mar_parameters<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> MARModel {
    let k = rng.random_range(1..=cfg.k_max);
    let beta: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
    let total: f64 = beta.iter().sum();
    let weights: Vec<f64> = beta.iter().map(|b| b / total).collect();
    let coef = Normal::new(0.0, cfg.coefficient_sd).expect("validated sd");
    let sig = LogNormal::new(cfg.sigma_log_mean, cfg.sigma_log_sd).expect("validated sigma");
    let seasonal = cfg.period > 1;
    let components = (0..k)
        .map(|_| {
            let p = rng.random_range(1..=cfg.ar_order_max);
            let ar_coeffs = (0..p).map(|_| coef.sample(rng)).collect();
            let big_p = if seasonal { rng.random_range(0..=cfg.seasonal_ar_order_max) } else { 0 };
            let seasonal_ar_coeffs = (0..big_p).map(|_| coef.sample(rng)).collect();
            let sigma = sig.sample(rng);
            let d = rng.random_bool(cfg.p_d) as u32;
            let seasonal_d = if seasonal { rng.random_bool(cfg.p_seasonal_d) as u32 } else { 0 };
            SeasonalARComponent {
                ar_coeffs,
                seasonal_ar_coeffs,
                d,
                seasonal_d,
                period: cfg.period,
                intercept: 0.0,
                sigma,
            }
        })
        .collect();
    MARModel { components, weights }
}

fn simulate_with_retries(
    cfg: &GeneratorConfig,
    n: usize,
    rng: &mut StreamRng,
) -> Result<(MARModel, Vec<f64>)> {
    for _ in 0..MAX_RETRIES {
        let model = sample_mar_parameters(cfg, rng);
        match simulate_mar(&model, n, model.default_burn_in(), rng) {
            Ok(x) => return Ok((model, x)),
            Err(Error::NonFiniteSample { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted { attempts: MAX_RETRIES })
}

/// Generates the `index`-th series of the batch keyed by `seed`.
pub fn generate_one(cfg: &GeneratorConfig, seed: u64, index: u64) -> Result<TimeSeries> {
    let mut rng = stream(seed, &[index]);
    let n = cfg.length_sampler.draw(&mut rng);
    let (model, values) = simulate_with_retries(cfg, n, &mut rng)?;
    Ok(TimeSeries {
        values,
        periods: vec![cfg.period],
        meta: Some(SeriesMeta {
            seed: Some(seed),
            index: Some(index),
            model: Some(model),
            ..Default::default()
        }),
    })
}

/// Generates `count` series; item `i` depends only on `(seed, i)`.
pub fn generate_batch(
    cfg: &GeneratorConfig,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<TimeSeries>> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    map_range(exec, count, |i| generate_one(cfg, seed, i as u64)).into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiSeasonalSpec {
    pub periods: Vec<usize>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub length: usize,
}

impl MultiSeasonalSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.periods.is_empty() || self.periods.contains(&0) {
            return bad("periods must be nonempty and positive");
        }
        if self.length < *self.periods.iter().max().unwrap() {
            return bad("length must be at least the largest period");
        }
        if let Some(w) = &self.weights {
            if w.len() != self.periods.len() {
                return bad("one weight per period is required");
            }
            if w.iter().any(|v| !(*v > 0.0 && *v < 1.0)) && w.len() > 1 {
                return bad("weights must lie in (0, 1)");
            }
            if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return bad("weights must sum to 1");
            }
        }
        Ok(())
    }
}

/// Simulates one standardized series per period and mixes them.
pub fn generate_multiseasonal(
    spec: &MultiSeasonalSpec,
    template: &GeneratorConfig,
    seed: u64,
) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = stream(seed, &[u64::MAX]);
    let mut parts = Vec::with_capacity(spec.periods.len());
    let mut models = Vec::with_capacity(spec.periods.len());
    for &p in &spec.periods {
        let mut cfg = template.clone();
        cfg.period = p;
        cfg.length_sampler = LengthSampler::Fixed(spec.length);
        cfg.validate()?;
        // A component can come out constant only in pathological configs;
        // treat it like an explosive draw.
        let mut attempt = 0;
        let z = loop {
            let (model, x) = simulate_with_retries(&cfg, spec.length, &mut rng)?;
            match crate::stats::standardize(&x) {
                Ok(z) => {
                    models.push(model);
                    break z;
                }
                Err(_) if attempt + 1 < MAX_RETRIES => attempt += 1,
                Err(_) => return Err(Error::RetryExhausted { attempts: MAX_RETRIES }),
            }
        };
        parts.push(z);
    }
    let weights = match &spec.weights {
        Some(w) => w.clone(),
        None => {
            let g: Vec<f64> = (0..parts.len()).map(|_| 1.0 - rng.random::<f64>()).collect();
            let s: f64 = g.iter().sum();
            g.iter().map(|v| v / s).collect()
        }
    };
    let values = (0..spec.length)
        .map(|t| parts.iter().zip(&weights).map(|(x, w)| w * x[t]).sum())
        .collect();
    let mut periods = spec.periods.clone();
    periods.sort_unstable();
    Ok(TimeSeries {
        values,
        periods,
        meta: Some(SeriesMeta {
            seed: Some(seed),
            components: models,
            mix_weights: weights,
            ..Default::default()
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_max_one_gives_single_component() {
        let mut cfg = GeneratorConfig::for_period(12);
        cfg.k_max = 1;
        let mut rng = stream(1, &[]);
        for _ in 0..100 {
            let m = sample_mar_parameters(&cfg, &mut rng);
            assert_eq!(m.k(), 1);
            assert_eq!(m.weights, vec![1.0]);
        }
    }

    #[test]
    fn sampled_models_are_valid() {
        for period in [1, 4, 12, 52] {
            let cfg = GeneratorConfig::for_period(period);
            let mut rng = stream(2, &[period as u64]);
            for _ in 0..500 {
                let m = sample_mar_parameters(&cfg, &mut rng);
                m.validate().unwrap();
                if period == 1 {
                    assert!(m.components.iter().all(|c| c.seasonal_d == 0 && c.seasonal_ar_coeffs.is_empty()));
                }
            }
        }
    }

    #[test]
    fn difference_probability_matches() {
        let cfg = GeneratorConfig::for_period(12);
        let mut rng = stream(3, &[]);
        let (mut ones, mut total) = (0usize, 0usize);
        while total < 10_000 {
            let m = sample_mar_parameters(&cfg, &mut rng);
            for c in &m.components {
                ones += c.d as usize;
                total += 1;
            }
        }
        let p = ones as f64 / total as f64;
        assert!((p - 0.9).abs() < 0.02, "p = {p}");
    }

    #[test]
    fn sigma_mean_matches_lognormal() {
        let cfg = GeneratorConfig::for_period(1);
        let mut rng = stream(4, &[]);
        let mut s = Vec::new();
        while s.len() < 10_000 {
            s.extend(sample_mar_parameters(&cfg, &mut rng).components.iter().map(|c| c.sigma));
        }
        let mean = crate::stats::mean(&s);
        let se = crate::stats::std_dev(&s) / (s.len() as f64).sqrt();
        let want = (0.1f64 + 0.005).exp();
        assert!((mean - want).abs() < 2.0 * se + 1e-3, "mean {mean} want {want}");
    }

    #[test]
    fn batch_is_deterministic_and_order_free() {
        let cfg = GeneratorConfig::for_period(4);
        let a = generate_batch(&cfg, 20, 11, Exec::Sequential).unwrap();
        let b = generate_batch(&cfg, 20, 11, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], generate_one(&cfg, 11, 7).unwrap());
        for ts in &a {
            assert!([60, 90, 120].contains(&ts.len()));
            assert_eq!(ts.periods, vec![4]);
            assert!(ts.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn zero_count_rejected() {
        assert!(generate_batch(&GeneratorConfig::default(), 0, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn single_period_mix_is_standardized_component() {
        let spec = MultiSeasonalSpec { periods: vec![12], weights: None, length: 120 };
        let ts = generate_multiseasonal(&spec, &GeneratorConfig::for_period(12), 5).unwrap();
        assert_eq!(ts.meta.as_ref().unwrap().mix_weights, vec![1.0]);
        assert!(crate::stats::mean(&ts.values).abs() < 1e-12);
        assert!((crate::stats::std_dev(&ts.values) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supplied_weights_combine_linearly() {
        let spec = MultiSeasonalSpec { periods: vec![4, 12], weights: Some(vec![0.5, 0.5]), length: 200 };
        let template = GeneratorConfig::for_period(1);
        let ts = generate_multiseasonal(&spec, &template, 8).unwrap();
        // rebuild the parts from the recorded models and the same stream
        let mut rng = stream(8, &[u64::MAX]);
        let mut parts = Vec::new();
        for &p in &spec.periods {
            let mut cfg = template.clone();
            cfg.period = p;
            let (_, x) = simulate_with_retries(&cfg, 200, &mut rng).unwrap();
            parts.push(crate::stats::standardize(&x).unwrap());
        }
        for t in 0..200 {
            assert_eq!(ts.values[t], 0.5 * parts[0][t] + 0.5 * parts[1][t]);
        }
    }
}
