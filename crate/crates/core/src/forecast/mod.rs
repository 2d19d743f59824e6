//! Forecast evaluation and feature-based method selection.

pub mod lasso;
pub mod methods;
pub mod qreg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, map_slice, Exec};
use crate::features::{compute_feature_vector, FeatureVector};
use crate::series::TimeSeries;
use crate::space::{FeatureMatrix, RobustScaler};

pub use lasso::{fit_quantile_lasso, LassoConfig, LassoFit};
pub use methods::{forecast, forecast_values, mase, ForecastMethod};

/// Floor applied to predicted MASE values.
pub const MIN_PREDICTED_MASE: f64 = 1e-6;

/// Forecast horizon per seasonal period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horizons(pub BTreeMap<usize, usize>);

impl Default for Horizons {
    fn default() -> Self {
        Horizons(BTreeMap::from([(1, 6), (4, 8), (12, 18)]))
    }
}

impl Horizons {
    /// Configured horizon, else one and a half seasonal cycles.
    pub fn get(&self, period: usize) -> usize {
        self.0.get(&period).copied().unwrap_or_else(|| (3 * period).div_ceil(2).max(6))
    }
}

/// Shortest training part accepted for a period.
pub fn min_train_length(period: usize) -> usize {
    (2 * period).max(10)
}

/// Features of the training parts plus one MASE column per method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTable {
    pub features: FeatureMatrix,
    pub methods: Vec<ForecastMethod>,
    /// `mase[row][method]`.
    pub mase: Vec<Vec<f64>>,
    /// `(series id, reason)` for every skipped input.
    pub skipped: Vec<(String, String)>,
}

/// Train/test evaluation of one series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesEvaluation {
    pub features: FeatureVector,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub period: usize,
    pub forecasts: Vec<Vec<f64>>,
    pub mase: Vec<f64>,
}

/// Splits off the last `h` values, forecasts them with every method and
/// computes features on the training part.
pub fn evaluate_series(ts: &TimeSeries, methods: &[ForecastMethod], horizons: &Horizons) -> Result<SeriesEvaluation> {
    let period = ts.max_period();
    let h = horizons.get(period);
    let need = h + min_train_length(period);
    if ts.len() < need {
        return Err(Error::TooShort { need, got: ts.len() });
    }
    let split = ts.len() - h;
    let train = ts.values[..split].to_vec();
    let test = ts.values[split..].to_vec();
    let mut forecasts = Vec::with_capacity(methods.len());
    let mut scores = Vec::with_capacity(methods.len());
    for m in methods {
        let f = forecast_values(*m, &train, period, h)?;
        scores.push(mase(&test, &f, &train, period)?);
        forecasts.push(f);
    }
    let tts = TimeSeries { values: train.clone(), periods: ts.periods.clone(), meta: None };
    Ok(SeriesEvaluation { features: compute_feature_vector(&tts), train, test, period, forecasts, mase: scores })
}

fn series_id(ts: &TimeSeries, fallback: usize) -> String {
    ts.meta.as_ref().and_then(|m| m.index).unwrap_or(fallback as u64).to_string()
}

/// Evaluates every series of `corpus`; failing series are skipped and
/// logged. Rows keep the input order.
pub fn build_training_table(
    corpus: &[TimeSeries],
    methods: &[ForecastMethod],
    horizons: &Horizons,
    exec: Exec,
) -> Result<TrainingTable> {
    let ids: Vec<String> = corpus.iter().enumerate().map(|(i, ts)| series_id(ts, i)).collect();
    build_training_table_with_ids(corpus, &ids, methods, horizons, exec)
}

/// As [`build_training_table`] with caller-supplied row ids.
pub fn build_training_table_with_ids(
    corpus: &[TimeSeries],
    ids: &[String],
    methods: &[ForecastMethod],
    horizons: &Horizons,
    exec: Exec,
) -> Result<TrainingTable> {
    if ids.len() != corpus.len() {
        return Err(Error::InvalidConfig("one id per series is required".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("the method bank is empty".into()));
    }
    let evals = map_range(exec, corpus.len(), |i| evaluate_series(&corpus[i], methods, horizons));
    let mut names: Option<Vec<String>> = None;
    let (mut rows, mut kept, mut scores, mut skipped) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, e) in evals.into_iter().enumerate() {
        let id = ids[i].clone();
        match e {
            Ok(ev) => {
                let n = names.get_or_insert_with(|| ev.features.names.clone());
                if *n != ev.features.names {
                    skipped.push((id, "feature columns differ from the first series".to_string()));
                    continue;
                }
                rows.push(ev.features.values);
                kept.push(id);
                scores.push(ev.mase);
            }
            Err(err) => skipped.push((id, err.to_string())),
        }
    }
    let names = names.ok_or(Error::EmptyDataset)?;
    let mut features = FeatureMatrix::new(names, rows)?;
    features.ids = kept;
    Ok(TrainingTable { features, methods: methods.to_vec(), mase: scores, skipped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodModel {
    pub method: ForecastMethod,
    /// Intercept first, one entry per used feature.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub adaptive_weights: Vec<f64>,
}

/// Per-method quantile-lasso predictors of MASE from features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub tau: f64,
    /// Scaler over the full input feature order.
    pub scaler: RobustScaler,
    /// Columns kept for regression (constant columns are dropped).
    pub used_features: Vec<String>,
    pub models: Vec<MethodModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl MetaModel {
    pub fn methods(&self) -> Vec<ForecastMethod> {
        self.models.iter().map(|m| m.method).collect()
    }

    fn used_row(&self, scaled: &[f64]) -> Vec<f64> {
        self.used_features
            .iter()
            .map(|n| {
                let j = self.scaler.names.iter().position(|s| s == n).expect("used feature is scaled");
                scaled[j]
            })
            .collect()
    }

    /// Predicted MASE per method for a row in the scaler's feature order,
    /// floored at [`MIN_PREDICTED_MASE`].
    pub fn predict_row(&self, row: &[Option<f64>]) -> Vec<f64> {
        let x = self.used_row(&self.scaler.transform_row(row));
        self.models.iter().map(|m| lasso::predict(&m.coefficients, &x).max(MIN_PREDICTED_MASE)).collect()
    }

    /// Reorders a feature vector to the scaler's column order; missing
    /// names become absent.
    pub fn align(&self, fv: &FeatureVector) -> Vec<Option<f64>> {
        self.scaler.names.iter().map(|n| fv.get(n)).collect()
    }
}

/// Fits one quantile-lasso model per method on the training table.
pub fn fit_meta_model(table: &TrainingTable, cfg: &LassoConfig, exec: Exec) -> Result<MetaModel> {
    let fm = &table.features;
    if fm.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let scaler = RobustScaler::fit(fm);
    let scaled: Vec<Vec<f64>> = fm.rows.iter().map(|r| scaler.transform_row(r)).collect();
    let mut keep = Vec::new();
    let mut flags = Vec::new();
    for (j, name) in fm.names.iter().enumerate() {
        let first = scaled[0][j];
        if scaled.iter().all(|r| r[j] == first) {
            flags.push(format!("dropped zero-variance column {name}"));
        } else {
            keep.push(j);
        }
    }
    let x: Vec<Vec<f64>> = scaled.iter().map(|r| keep.iter().map(|j| r[*j]).collect()).collect();
    let fits: Vec<Result<LassoFit>> = map_slice(exec, &table.methods, |m| {
        let k = table.methods.iter().position(|q| q == m).expect("method in bank");
        let y: Vec<f64> = table.mase.iter().map(|r| r[k]).collect();
        fit_quantile_lasso(&x, &y, cfg, Exec::Sequential)
    });
    let mut models = Vec::with_capacity(fits.len());
    for (m, f) in table.methods.iter().zip(fits) {
        let f = f?;
        models.push(MethodModel {
            method: *m,
            coefficients: f.coefficients,
            lambda: f.lambda,
            adaptive_weights: f.adaptive_weights,
        });
    }
    Ok(MetaModel {
        tau: cfg.tau,
        scaler,
        used_features: keep.iter().map(|j| fm.names[*j].clone()).collect(),
        models,
        flags,
    })
}

/// `exp(1/M^3)`-proportional weights with the exponent capped at 700.
pub fn averaging_weights(predicted: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = predicted
        .iter()
        .map(|p| {
            let m = if p.is_nan() { MIN_PREDICTED_MASE } else { p.max(MIN_PREDICTED_MASE) };
            (1.0 / (m * m * m)).min(700.0)
        })
        .collect();
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = e.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Index of the smallest prediction; the earliest wins ties.
pub fn select_index(predicted: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in predicted.iter().enumerate() {
        if *p < predicted[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub selected: ForecastMethod,
    pub predicted_mase: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, f64>,
}

/// Predicts every method's MASE from `features` and picks the smallest.
pub fn predict_and_select(meta: &MetaModel, features: &[Option<f64>]) -> Recommendation {
    let pred = meta.predict_row(features);
    let methods = meta.methods();
    let w = averaging_weights(&pred);
    // ties resolve by the canonical method order
    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by_key(|i| methods[*i]);
    let sorted: Vec<f64> = order.iter().map(|i| pred[*i]).collect();
    let sel = order[select_index(&sorted)];
    Recommendation {
        selected: methods[sel],
        predicted_mase: methods.iter().zip(&pred).map(|(m, p)| (m.to_string(), *p)).collect(),
        weights: methods.iter().zip(&w).map(|(m, v)| (m.to_string(), *v)).collect(),
    }
}

/// Pointwise weighted combination of per-method forecasts.
pub fn combine(forecasts: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let h = forecasts.first().map_or(0, |f| f.len());
    (0..h).map(|t| forecasts.iter().zip(weights).map(|(f, w)| w * f[t]).sum()).collect()
}

/// Out-of-sample comparison of selection, averaging and the single methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub evaluated: usize,
    pub skipped: usize,
    pub median_selection: f64,
    pub median_averaging: f64,
    pub median_by_method: BTreeMap<String, f64>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    crate::stats::quantile_sorted(v, 0.5)
}

pub fn evaluate_pipeline(meta: &MetaModel, test: &[TimeSeries], horizons: &Horizons, exec: Exec) -> Result<PipelineReport> {
    let methods = meta.methods();
    let evals = map_range(exec, test.len(), |i| evaluate_series(&test[i], &methods, horizons));
    let (mut sel, mut avg) = (Vec::new(), Vec::new());
    let mut by: Vec<Vec<f64>> = vec![Vec::new(); methods.len()];
    let mut skipped = 0;
    for e in evals {
        let Ok(ev) = e else {
            skipped += 1;
            continue;
        };
        let pred = meta.predict_row(&meta.align(&ev.features));
        let rec = predict_and_select(meta, &meta.align(&ev.features));
        let k = methods.iter().position(|m| *m == rec.selected).expect("selected from bank");
        sel.push(ev.mase[k]);
        let comb = combine(&ev.forecasts, &averaging_weights(&pred));
        avg.push(mase(&ev.test, &comb, &ev.train, ev.period)?);
        for (j, v) in ev.mase.iter().enumerate() {
            by[j].push(*v);
        }
    }
    if sel.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(PipelineReport {
        evaluated: sel.len(),
        skipped,
        median_selection: median(&mut sel),
        median_averaging: median(&mut avg),
        median_by_method: methods.iter().zip(by.iter_mut()).map(|(m, v)| (m.to_string(), median(v))).collect(),
    })
}
