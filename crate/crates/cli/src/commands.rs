//! Operations shared by the command line and the HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use gratis::features::{canonical_names, compute_feature_vector, feature_range, group_of, is_seasonal_only, FeatureGroup, FeatureRange};
use gratis::forecast::{
    build_training_table_with_ids, fit_meta_model, predict_and_select, ForecastMethod, Horizons, LassoConfig,
    MetaModel, TrainingTable,
};
use gratis::formats::{default_ids, vectors_to_matrix, EmbeddingTable, SeriesRecord};
use gratis::generator::{generate_batch, generate_multiseasonal, GeneratorConfig, LengthSampler, MultiSeasonalSpec};
use gratis::mar::MARModel;
use gratis::rng::derive_seed;
use gratis::space::{pca_embed, scale_feature_matrix, tsne_embed, CoverageGrid, CoverageReport, EmbedMethod, FeatureMatrix, TsneConfig};
use gratis::tune::{tune_to_target, GAConfig, ProgressEvent, TargetSpec, TraceEntry};
use gratis::{Exec, TimeSeries};

use crate::error::{CliError, CliResult};

fn default_period() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    #[serde(default = "default_period")]
    pub period: usize,
    pub count: usize,
    #[serde(default)]
    pub length: Option<usize>,
    #[serde(default)]
    pub length_pool: Option<Vec<usize>>,
    /// Several periods at once; every series mixes one component per period.
    #[serde(default)]
    pub periods: Option<Vec<usize>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

pub fn run_generate(req: &GenerateRequest, exec: Exec) -> CliResult<Vec<SeriesRecord>> {
    if req.count == 0 {
        return Err(CliError::usage("count must be at least 1"));
    }
    if req.length.is_some() && req.length_pool.is_some() {
        return Err(CliError::usage("give either a length or a length pool, not both"));
    }
    let series: Vec<TimeSeries> = match &req.periods {
        Some(periods) if periods.len() > 1 => {
            let length = req.length.ok_or_else(|| CliError::usage("multi-period generation needs a length"))?;
            let spec = MultiSeasonalSpec { periods: periods.clone(), weights: req.weights.clone(), length };
            spec.validate()?;
            let template = GeneratorConfig::default();
            gratis::exec::map_range(exec, req.count, |i| {
                generate_multiseasonal(&spec, &template, derive_seed(req.seed, &[i as u64]))
            })
            .into_iter()
            .collect::<gratis::Result<_>>()?
        }
        _ => {
            let period = req.periods.as_ref().and_then(|p| p.first().copied()).unwrap_or(req.period);
            let mut cfg = GeneratorConfig::for_period(period);
            if let Some(n) = req.length {
                cfg.length_sampler = LengthSampler::Fixed(n);
            }
            if let Some(pool) = &req.length_pool {
                cfg.length_sampler = LengthSampler::Pool(pool.clone());
            }
            generate_batch(&cfg, req.count, req.seed, exec)?
        }
    };
    Ok(default_ids(series.len()).into_iter().zip(series).map(|(id, ts)| SeriesRecord::new(id, ts)).collect())
}

pub fn series_of(records: &[SeriesRecord]) -> CliResult<Vec<TimeSeries>> {
    Ok(records.iter().map(|r| r.series()).collect::<gratis::Result<_>>()?)
}

/// One row per series under the widest canonical header.
pub fn run_features(records: &[SeriesRecord], exec: Exec) -> CliResult<FeatureMatrix> {
    let series = series_of(records)?;
    let fvs = gratis::exec::map_slice(exec, &series, compute_feature_vector);
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    Ok(vectors_to_matrix(&ids, &fvs)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub method: EmbedMethod,
    #[serde(default)]
    pub tsne: TsneConfig,
}

/// Embeds several feature tables jointly and splits the points back.
pub fn run_embed(parts: &[FeatureMatrix], req: &EmbedRequest, exec: Exec) -> CliResult<Vec<EmbeddingTable>> {
    if parts.is_empty() {
        return Err(CliError::usage("nothing to embed"));
    }
    let names = parts.iter().max_by_key(|p| p.names.len()).map(|p| p.names.clone()).unwrap_or_default();
    let aligned: Vec<FeatureMatrix> = parts
        .iter()
        .map(|p| FeatureMatrix {
            names: names.clone(),
            ids: p.ids.clone(),
            rows: p
                .rows
                .iter()
                .map(|r| names.iter().map(|n| p.names.iter().position(|m| m == n).and_then(|j| r[j])).collect())
                .collect(),
        })
        .collect();
    let all = FeatureMatrix::concat(&aligned)?;
    if all.n_rows() < 3 {
        return Err(CliError::usage("an embedding needs at least three rows"));
    }
    let scaled = scale_feature_matrix(&all);
    let emb = match req.method {
        EmbedMethod::Pca => pca_embed(&scaled.data)?.0,
        EmbedMethod::Tsne => tsne_embed(&scaled.data, &req.tsne, exec)?,
    };
    let mut out = Vec::with_capacity(parts.len());
    let mut at = 0;
    for p in parts {
        let n = p.n_rows();
        out.push(EmbeddingTable {
            ids: p.ids.clone(),
            points: emb.points[at..at + n].to_vec(),
            method: emb.method,
            seed: emb.seed,
        });
        at += n;
    }
    Ok(out)
}

pub fn run_coverage(a: &EmbeddingTable, b: &EmbeddingTable, bins: usize) -> CliResult<CoverageReport> {
    Ok(CoverageGrid::build(&a.points, &b.points, bins)?.report())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaOverrides {
    pub population: Option<usize>,
    pub max_generations: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub mutation_prob: Option<f64>,
    pub mutation_scale: Option<f64>,
    pub tournament_size: Option<usize>,
    pub elitism: Option<usize>,
    pub tolerance: Option<f64>,
    pub k_fixed: Option<usize>,
    pub p_fixed: Option<usize>,
}

impl GaOverrides {
    pub fn apply(&self, cfg: &mut GAConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { cfg.$f = v; })*};
        }
        set!(population, max_generations, crossover_prob, mutation_prob, mutation_scale, tournament_size, elitism, tolerance, k_fixed, p_fixed);
    }
}

fn default_count() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneRequest {
    pub period: usize,
    pub length: usize,
    pub targets: BTreeMap<String, f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ga: GaOverrides,
}

impl TuneRequest {
    /// Target in canonical feature order.
    pub fn target(&self) -> CliResult<TargetSpec> {
        let canon = canonical_names();
        if let Some(bad) = self.targets.keys().find(|k| !canon.contains(k)) {
            return Err(gratis::Error::UnknownFeature(bad.clone()).into());
        }
        let names: Vec<String> = canon.into_iter().filter(|n| self.targets.contains_key(n)).collect();
        let values = names.iter().map(|n| self.targets[n]).collect();
        let t = TargetSpec { names, values, period: self.period, length: self.length };
        t.validate()?;
        Ok(t)
    }

    pub fn ga_config(&self, index: usize) -> CliResult<GAConfig> {
        let mut cfg = GAConfig::default();
        self.ga.apply(&mut cfg);
        cfg.seed = if self.count == 1 { self.seed } else { derive_seed(self.seed, &[index as u64]) };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedSeries {
    pub id: String,
    pub seed: u64,
    pub fitness: f64,
    pub generations: usize,
    pub model: MARModel,
    pub genome: Vec<f64>,
    pub feature_names: Vec<String>,
    pub feature_values: Vec<Option<f64>>,
    pub trace: Vec<TraceEntry>,
}

/// Result bundle of a tuning run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneBundle {
    pub target: TargetSpec,
    pub series: Vec<SeriesRecord>,
    pub results: Vec<TunedSeries>,
}

/// A progress event tagged with the series it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneProgress {
    pub series_index: usize,
    #[serde(flatten)]
    pub event: ProgressEvent,
}

pub fn run_tune(req: &TuneRequest, exec: Exec, progress: &mut dyn FnMut(&TuneProgress)) -> CliResult<TuneBundle> {
    if req.count == 0 {
        return Err(CliError::usage("count must be at least 1"));
    }
    let target = req.target()?;
    let ids = default_ids(req.count);
    let (mut series, mut results) = (Vec::new(), Vec::new());
    for (i, id) in ids.into_iter().enumerate() {
        let cfg = req.ga_config(i)?;
        let r = tune_to_target(&target, &cfg, exec, &mut |e| {
            progress(&TuneProgress { series_index: i, event: e.clone() })
        })?;
        let mut ts = r.series.clone();
        let meta = ts.meta.get_or_insert_with(Default::default);
        meta.seed = Some(cfg.seed);
        meta.model = Some(r.model.clone());
        series.push(SeriesRecord::new(id.clone(), ts));
        results.push(TunedSeries {
            id,
            seed: cfg.seed,
            fitness: r.fitness,
            generations: r.generations,
            model: r.model,
            genome: r.genome,
            feature_names: target.names.clone(),
            feature_values: r.feature_values,
            trace: r.trace,
        });
    }
    Ok(TuneBundle { target, series, results })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRequest {
    pub methods: Vec<ForecastMethod>,
    pub horizons: Horizons,
    pub lasso: LassoConfig,
}

impl Default for TrainRequest {
    fn default() -> Self {
        TrainRequest { methods: ForecastMethod::ALL.to_vec(), horizons: Horizons::default(), lasso: LassoConfig::default() }
    }
}

pub fn run_train_meta(records: &[SeriesRecord], req: &TrainRequest, exec: Exec) -> CliResult<(TrainingTable, MetaModel)> {
    let series = series_of(records)?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let table = build_training_table_with_ids(&series, &ids, &req.methods, &req.horizons, exec)?;
    let meta = fit_meta_model(&table, &req.lasso, exec)?;
    Ok((table, meta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRow {
    pub id: String,
    pub selected: ForecastMethod,
    pub predicted_mase: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, f64>,
}

/// One selection per feature row; columns are matched by name.
pub fn run_recommend(meta: &MetaModel, fm: &FeatureMatrix) -> CliResult<Vec<RecommendationRow>> {
    let idx: Vec<Option<usize>> = meta.scaler.names.iter().map(|n| fm.names.iter().position(|m| m == n)).collect();
    if idx.iter().all(Option::is_none) {
        return Err(CliError::usage("the feature table shares no columns with the meta-model"));
    }
    Ok(fm
        .ids
        .iter()
        .zip(&fm.rows)
        .map(|(id, row)| {
            let aligned: Vec<Option<f64>> = idx.iter().map(|j| j.and_then(|j| row[j])).collect();
            let rec = predict_and_select(meta, &aligned);
            RecommendationRow {
                id: id.clone(),
                selected: rec.selected,
                predicted_mase: rec.predicted_mase,
                weights: rec.weights,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub group: FeatureGroup,
    pub range: FeatureRange,
    pub seasonal_only: bool,
}

/// Canonical names with their ranges, as served to the UI.
pub fn feature_catalog() -> Vec<FeatureInfo> {
    canonical_names()
        .into_iter()
        .map(|name| FeatureInfo {
            group: group_of(&name).expect("canonical names have groups"),
            range: feature_range(&name),
            seasonal_only: is_seasonal_only(&name),
            name,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_is_seeded() {
        let req = GenerateRequest { period: 4, count: 3, length: Some(40), length_pool: None, periods: None, weights: None, seed: 9 };
        let a = run_generate(&req, Exec::Parallel).unwrap();
        let b = run_generate(&req, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.values.len() == 40 && r.periods == vec![4]));
        assert_eq!(run_generate(&GenerateRequest { count: 0, ..req }, Exec::Sequential).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn multi_period_generation() {
        let req = GenerateRequest {
            period: 1,
            count: 2,
            length: Some(400),
            length_pool: None,
            periods: Some(vec![7, 30]),
            weights: None,
            seed: 1,
        };
        let recs = run_generate(&req, Exec::Sequential).unwrap();
        assert_eq!(recs[0].periods, vec![7, 30]);
        assert_ne!(recs[0].values, recs[1].values);
    }

    #[test]
    fn tune_target_is_canonical_and_validated() {
        let req = TuneRequest {
            period: 1,
            length: 50,
            targets: BTreeMap::from([("trend".into(), 0.9), ("x.acf1".into(), 0.5)]),
            count: 1,
            seed: 0,
            ga: GaOverrides::default(),
        };
        assert_eq!(req.target().unwrap().names, vec!["x.acf1", "trend"]);
        let mut bad = req.clone();
        bad.targets.insert("seasonal.strength".into(), 0.9);
        assert_eq!(bad.target().unwrap_err().exit_code(), 2);
        let mut unknown = req;
        unknown.targets.insert("nope".into(), 1.0);
        let e = unknown.target().unwrap_err();
        assert!(e.message().contains("valid names") && e.message().contains("entropy"));
    }

    #[test]
    fn catalog_carries_entropy_range() {
        let c = feature_catalog();
        assert_eq!(c.len(), 42);
        let e = c.iter().find(|f| f.name == "entropy").unwrap();
        assert_eq!((e.range.min, e.range.max, e.range.min_inclusive, e.range.max_inclusive), (Some(0.0), Some(1.0), false, true));
        assert!(c.iter().find(|f| f.name == "seasonal.strength").unwrap().seasonal_only);
    }
}
