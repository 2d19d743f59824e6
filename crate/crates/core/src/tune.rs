//! Genetic-algorithm tuning of MAR parameters towards a target feature vector.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Exec};
use crate::features::{canonical_names, compute_features, is_seasonal_only, FeatureSelection};
use crate::mar::{simulate_mar, MARModel, SeasonalARComponent};
use crate::rng::{stream, StreamRng};
use crate::series::{SeriesMeta, TimeSeries};

pub const SIGMA_MIN: f64 = 1e-4;
pub const SIGMA_MAX: f64 = 1e2;
pub const COEF_RANGE: (f64, f64) = (-1.5, 1.5);
/// Lower edge of the raw weight gene, keeping every decoded weight positive.
pub const BETA_MIN: f64 = 1e-6;

const TAG_INIT: u64 = 0x696e_6974;
const TAG_OPS: u64 = 0x6f70_7300;
const TAG_EVAL: u64 = 0x6576_616c;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub period: usize,
    pub length: usize,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.names.is_empty() {
            return Err(Error::InvalidConfig("a target needs at least one feature".into()));
        }
        if self.names.len() != self.values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} feature names but {} target values",
                self.names.len(),
                self.values.len()
            )));
        }
        let valid = canonical_names();
        for n in &self.names {
            if !valid.contains(n) {
                return Err(Error::UnknownFeature(n.clone()));
            }
            if self.period <= 1 && is_seasonal_only(n) {
                return Err(Error::InvalidConfig(format!(
                    "feature `{n}` needs a seasonal period greater than 1"
                )));
            }
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("target value {v} is not finite")));
        }
        if self.period == 0 || self.length == 0 {
            return Err(Error::InvalidConfig("period and length must be positive".into()));
        }
        Ok(())
    }

    /// Scaling constant `c = ||F||`, or 1 for a (near) zero target.
    pub fn scale(&self) -> f64 {
        let c = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if c < 1e-9 {
            1.0
        } else {
            c
        }
    }
}

/// Layout of the fixed-structure genome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeLayout {
    pub period: usize,
    pub p_fixed: usize,
    pub k_fixed: usize,
}

impl GenomeLayout {
    pub fn new(period: usize, p_fixed: usize, k_fixed: usize) -> Self {
        GenomeLayout { period, p_fixed, k_fixed }
    }

    fn seasonal(&self) -> usize {
        usize::from(self.period > 1)
    }

    /// beta, AR coefficients, seasonal AR coefficient, log-sigma, d, D.
    pub fn block_size(&self) -> usize {
        1 + self.p_fixed + self.seasonal() + 3
    }

    pub fn genome_len(&self) -> usize {
        self.k_fixed * self.block_size()
    }

    /// `(low, high)` bounds of every gene.
    pub fn gene_ranges(&self) -> Vec<(f64, f64)> {
        let mut block = vec![(BETA_MIN, 1.0)];
        block.extend(std::iter::repeat_n(COEF_RANGE, self.p_fixed + self.seasonal()));
        block.push((0.5f64.ln(), 2f64.ln()));
        block.push((0.0, 1.0));
        block.push((0.0, 1.0));
        let mut out = Vec::with_capacity(self.genome_len());
        for _ in 0..self.k_fixed {
            out.extend_from_slice(&block);
        }
        out
    }
}

/// Decodes a genome into a valid model. Out-of-range genes are clamped.
pub fn decode(genome: &[f64], layout: &GenomeLayout) -> MARModel {
    assert_eq!(genome.len(), layout.genome_len(), "genome length does not match the layout");
    let b = layout.block_size();
    let p = layout.p_fixed;
    let clean = |g: f64, lo: f64, hi: f64| if g.is_nan() { lo } else { g.clamp(lo, hi) };
    let mut betas = Vec::with_capacity(layout.k_fixed);
    let mut components = Vec::with_capacity(layout.k_fixed);
    for blk in genome.chunks(b) {
        betas.push(clean(blk[0], BETA_MIN, 1.0));
        let ar_coeffs = blk[1..1 + p].iter().map(|g| clean(*g, COEF_RANGE.0, COEF_RANGE.1)).collect();
        let seasonal_ar_coeffs = if layout.period > 1 {
            vec![clean(blk[1 + p], COEF_RANGE.0, COEF_RANGE.1)]
        } else {
            Vec::new()
        };
        let rest = &blk[1 + p + layout.seasonal()..];
        let sigma = if rest[0].is_nan() { 1.0 } else { rest[0].exp().clamp(SIGMA_MIN, SIGMA_MAX) };
        components.push(SeasonalARComponent {
            ar_coeffs,
            seasonal_ar_coeffs,
            d: u32::from(rest[1] >= 0.5),
            seasonal_d: if layout.period > 1 { u32::from(rest[2] >= 0.5) } else { 0 },
            period: layout.period,
            intercept: 0.0,
            sigma,
        });
    }
    let total: f64 = betas.iter().sum();
    let weights = betas.iter().map(|b| b / total).collect();
    MARModel { components, weights }
}

/// Right inverse of [`decode`] on models with the layout's structure.
pub fn encode(model: &MARModel, layout: &GenomeLayout) -> Result<Vec<f64>> {
    if model.k() != layout.k_fixed {
        return Err(Error::InvalidModel(format!(
            "model has {} components, layout expects {}",
            model.k(),
            layout.k_fixed
        )));
    }
    let mut g = Vec::with_capacity(layout.genome_len());
    for (c, w) in model.components.iter().zip(&model.weights) {
        if c.ar_coeffs.len() > layout.p_fixed || c.seasonal_ar_coeffs.len() > layout.seasonal() {
            return Err(Error::InvalidModel("component order exceeds the genome layout".into()));
        }
        if c.d > 1 || c.period != layout.period || c.intercept != 0.0 {
            return Err(Error::InvalidModel("component is outside the reachable set".into()));
        }
        g.push(*w);
        for i in 0..layout.p_fixed {
            g.push(c.ar_coeffs.get(i).copied().unwrap_or(0.0));
        }
        if layout.period > 1 {
            g.push(c.seasonal_ar_coeffs.first().copied().unwrap_or(0.0));
        }
        g.push(c.sigma.ln());
        g.push(c.d as f64);
        g.push(c.seasonal_d as f64);
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GAConfig {
    pub population: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Stop once the best fitness reaches this value.
    pub tolerance: f64,
    pub seed: u64,
    pub k_fixed: usize,
    pub p_fixed: usize,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population: 30,
            max_generations: 100,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            mutation_scale: 0.1,
            tournament_size: 3,
            elitism: 1,
            tolerance: -0.05,
            seed: 0,
            k_fixed: 3,
            p_fixed: 2,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.population < 4 {
            return bad("population must be at least 4");
        }
        for p in [self.crossover_prob, self.mutation_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return bad("mutation scale must be a nonnegative number");
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be at least 1");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if self.k_fixed == 0 || self.p_fixed == 0 {
            return bad("k_fixed and p_fixed must be at least 1");
        }
        if self.tolerance.is_nan() {
            return bad("tolerance must not be NaN");
        }
        Ok(())
    }

    pub fn layout(&self, period: usize) -> GenomeLayout {
        GenomeLayout::new(period, self.p_fixed, self.k_fixed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Vec<f64>,
    /// Fitness recorded when the individual was evaluated; `-inf` marks an
    /// explosive simulation.
    pub fitness: f64,
    pub features: Vec<Option<f64>>,
    pub series: Vec<f64>,
}

/// `-||F - F~|| / c` for already-computed features; absent entries count as
/// zero.
pub fn distance_fitness(features: &[Option<f64>], target: &TargetSpec) -> f64 {
    let d2: f64 = features
        .iter()
        .zip(&target.values)
        .map(|(f, t)| match f {
            Some(v) => (v - t).powi(2),
            None => t * t,
        })
        .sum();
    -d2.sqrt() / target.scale()
}

fn evaluate_with(genome: &[f64], target: &TargetSpec, layout: &GenomeLayout, rng: &mut StreamRng) -> Individual {
    let model = decode(genome, layout);
    let k = target.names.len();
    match simulate_mar(&model, target.length, model.default_burn_in(), rng) {
        Ok(series) => {
            let sel = FeatureSelection::for_names(&target.names).expect("validated target");
            let ts = TimeSeries { values: series, periods: vec![layout.period], meta: None };
            let fv = compute_features(&ts, &sel);
            let features: Vec<Option<f64>> = target.names.iter().map(|n| fv.get(n)).collect();
            Individual {
                genome: genome.to_vec(),
                fitness: distance_fitness(&features, target),
                features,
                series: ts.values,
            }
        }
        Err(_) => Individual {
            genome: genome.to_vec(),
            fitness: f64::NEG_INFINITY,
            features: vec![None; k],
            series: Vec::new(),
        },
    }
}

/// Simulates one series from the decoded genome and scores its features.
pub fn fitness(genome: &[f64], target: &TargetSpec, layout: &GenomeLayout, seed: u64) -> f64 {
    evaluate_with(genome, target, layout, &mut stream(seed, &[TAG_EVAL])).fitness
}

fn evaluate_all(genomes: Vec<Vec<f64>>, target: &TargetSpec, layout: &GenomeLayout, seed: u64, generation: u64, exec: Exec) -> Vec<Individual> {
    map_range(exec, genomes.len(), |i| {
        let mut rng = stream(seed, &[TAG_EVAL, generation, i as u64]);
        evaluate_with(&genomes[i], target, layout, &mut rng)
    })
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate() {
        if ind.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

fn tournament(pop: &[Individual], size: usize, rng: &mut StreamRng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let c = rng.random_range(0..pop.len());
        if pop[c].fitness > pop[best].fitness {
            best = c;
        }
    }
    best
}

/// Random genomes drawn uniformly over the gene ranges.
pub fn initial_population(
    target: &TargetSpec,
    cfg: &GAConfig,
    exec: Exec,
) -> Vec<Individual> {
    let layout = cfg.layout(target.period);
    let ranges = layout.gene_ranges();
    let mut rng = stream(cfg.seed, &[TAG_INIT]);
    let genomes: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| ranges.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect())
        .collect();
    evaluate_all(genomes, target, &layout, cfg.seed, 0, exec)
}

/// Produces generation `generation` from `pop`.
pub fn evolve(
    pop: &[Individual],
    target: &TargetSpec,
    cfg: &GAConfig,
    generation: u64,
    exec: Exec,
) -> Vec<Individual> {
    let layout = cfg.layout(target.period);
    let ranges = layout.gene_ranges();
    let mut rng = stream(cfg.seed, &[TAG_OPS, generation]);

    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|a, b| pop[*b].fitness.total_cmp(&pop[*a].fitness).then(a.cmp(b)));
    let elites: Vec<Individual> = order[..cfg.elitism].iter().map(|i| pop[*i].clone()).collect();

    let need = cfg.population - elites.len();
    let mut children: Vec<Vec<f64>> = Vec::with_capacity(need + 1);
    while children.len() < need {
        let a = &pop[tournament(pop, cfg.tournament_size, &mut rng)].genome;
        let b = &pop[tournament(pop, cfg.tournament_size, &mut rng)].genome;
        let (mut c1, mut c2) = (a.clone(), b.clone());
        if rng.random::<f64>() < cfg.crossover_prob {
            for (j, (lo, hi)) in ranges.iter().enumerate() {
                let u1 = rng.random_range(-0.25..1.25);
                let u2 = rng.random_range(-0.25..1.25);
                c1[j] = (u1 * a[j] + (1.0 - u1) * b[j]).clamp(*lo, *hi);
                c2[j] = (u2 * b[j] + (1.0 - u2) * a[j]).clamp(*lo, *hi);
            }
        }
        for c in [&mut c1, &mut c2] {
            for (j, (lo, hi)) in ranges.iter().enumerate() {
                if cfg.mutation_prob > 0.0 && rng.random::<f64>() < cfg.mutation_prob {
                    let sd = cfg.mutation_scale * (hi - lo);
                    if sd > 0.0 {
                        let step = Normal::new(0.0, sd).expect("positive sd").sample(&mut rng);
                        c[j] = (c[j] + step).clamp(*lo, *hi);
                    }
                }
            }
        }
        children.push(c1);
        if children.len() < need {
            children.push(c2);
        }
    }
    let mut next = elites;
    next.extend(evaluate_all(children, target, &layout, cfg.seed, generation, exec));
    next
}

/// One progress report per generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_feature_values: Vec<Option<f64>>,
    pub feature_names: Vec<String>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub target: TargetSpec,
    pub series: TimeSeries,
    pub model: MARModel,
    pub genome: Vec<f64>,
    pub fitness: f64,
    pub feature_values: Vec<Option<f64>>,
    pub generations: usize,
    pub trace: Vec<TraceEntry>,
}

fn mean_finite(pop: &[Individual]) -> f64 {
    let f: Vec<f64> = pop.iter().map(|i| i.fitness).filter(|f| f.is_finite()).collect();
    if f.is_empty() {
        f64::NEG_INFINITY
    } else {
        f.iter().sum::<f64>() / f.len() as f64
    }
}

/// Runs the GA until the tolerance or the generation cap is reached and
/// returns the closest series seen.
pub fn tune_to_target(
    target: &TargetSpec,
    cfg: &GAConfig,
    exec: Exec,
    progress: &mut dyn FnMut(&ProgressEvent),
) -> Result<TuneResult> {
    target.validate()?;
    cfg.validate()?;
    let layout = cfg.layout(target.period);
    let start = Instant::now();
    let mut pop = initial_population(target, cfg, exec);
    let mut best = pop[best_index(&pop)].clone();
    let mut trace = Vec::new();
    let mut generation = 0;
    loop {
        let b = &pop[best_index(&pop)];
        if b.fitness > best.fitness {
            best = b.clone();
        }
        trace.push(TraceEntry { generation, best_fitness: best.fitness, mean_fitness: mean_finite(&pop) });
        progress(&ProgressEvent {
            generation,
            best_fitness: best.fitness,
            best_feature_values: best.features.clone(),
            feature_names: target.names.clone(),
            elapsed_ms: start.elapsed().as_millis() as u64,
        });
        if best.fitness >= cfg.tolerance || generation >= cfg.max_generations {
            break;
        }
        generation += 1;
        pop = evolve(&pop, target, cfg, generation as u64, exec);
    }
    if !best.fitness.is_finite() {
        return Err(Error::RetryExhausted { attempts: trace.len() * cfg.population });
    }
    let model = decode(&best.genome, &layout);
    let series = TimeSeries {
        values: best.series.clone(),
        periods: vec![target.period],
        meta: Some(SeriesMeta { seed: Some(cfg.seed), model: Some(model.clone()), ..Default::default() }),
    };
    Ok(TuneResult {
        target: target.clone(),
        series,
        model,
        genome: best.genome,
        fitness: best.fitness,
        feature_values: best.features,
        generations: generation,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::compute_feature_vector;
    use crate::generator::{generate_one, GeneratorConfig};

    fn layout() -> GenomeLayout {
        GenomeLayout::new(12, 2, 3)
    }

    fn random_genome(rng: &mut StreamRng, l: &GenomeLayout) -> Vec<f64> {
        l.gene_ranges().iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect()
    }

    #[test]
    fn equal_betas_give_uniform_weights() {
        let l = layout();
        let mut r = stream(1, &[]);
        let mut g = random_genome(&mut r, &l);
        for k in 0..3 {
            g[k * l.block_size()] = 0.4;
        }
        let m = decode(&g, &l);
        for w in &m.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn difference_gene_threshold() {
        let l = GenomeLayout::new(1, 2, 1);
        let mut g = vec![0.5, 0.1, 0.2, 0.0, 0.49, 0.0];
        assert_eq!(decode(&g, &l).components[0].d, 0);
        g[4] = 0.5;
        assert_eq!(decode(&g, &l).components[0].d, 1);
    }

    #[test]
    fn decode_is_total_on_the_gene_box() {
        for l in [layout(), GenomeLayout::new(1, 2, 3), GenomeLayout::new(4, 3, 2)] {
            let mut r = stream(2, &[l.period as u64]);
            let ranges = l.gene_ranges();
            for _ in 0..10_000 {
                let g: Vec<f64> = ranges.iter().map(|(lo, hi)| r.random_range(*lo..=*hi)).collect();
                decode(&g, &l).validate().unwrap();
            }
        }
    }

    #[test]
    fn encode_round_trips_weights() {
        let l = layout();
        let mut r = stream(3, &[]);
        for _ in 0..100 {
            let m = decode(&random_genome(&mut r, &l), &l);
            let back = decode(&encode(&m, &l).unwrap(), &l);
            for (a, b) in m.weights.iter().zip(&back.weights) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in m.components.iter().zip(&back.components) {
                assert_eq!(a.ar_coeffs, b.ar_coeffs);
                assert_eq!(a.seasonal_ar_coeffs, b.seasonal_ar_coeffs);
                assert_eq!((a.d, a.seasonal_d), (b.d, b.seasonal_d));
                assert!((a.sigma / b.sigma - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fitness_edge_cases() {
        let t = TargetSpec { names: vec!["x.acf1".into(), "entropy".into()], values: vec![0.3, 0.4], period: 1, length: 50 };
        assert_eq!(distance_fitness(&[Some(0.3), Some(0.4)], &t), 0.0);
        let z = TargetSpec { values: vec![0.0, 0.0], ..t.clone() };
        assert!((distance_fitness(&[Some(0.3), Some(0.4)], &z) + 0.5).abs() < 1e-15);
        let c = t.scale();
        assert!((distance_fitness(&[None, Some(0.4)], &t) + 0.3 / c).abs() < 1e-15);
    }

    #[test]
    fn target_validation() {
        let ok = TargetSpec { names: vec!["trend".into()], values: vec![0.9], period: 1, length: 20 };
        ok.validate().unwrap();
        let seas = TargetSpec { names: vec!["seasonal.strength".into()], ..ok.clone() };
        assert!(seas.validate().is_err());
        let unknown = TargetSpec { names: vec!["bogus".into()], ..ok.clone() };
        assert!(matches!(unknown.validate(), Err(Error::UnknownFeature(_))));
        let nan = TargetSpec { values: vec![f64::NAN], ..ok };
        assert!(nan.validate().is_err());
    }

    fn self_target(seed: u64, period: usize, n: usize) -> (TargetSpec, MARModel) {
        let names: Vec<String> = ["ndiffs", "x.acf1", "entropy", "trend"].iter().map(|s| s.to_string()).collect();
        let ts = generate_one(&GeneratorConfig::for_period(period).with_length(n), seed, 0).unwrap();
        let fv = compute_feature_vector(&ts);
        let values = names.iter().map(|n| fv.get(n).unwrap()).collect();
        (TargetSpec { names, values, period, length: n }, ts.meta.unwrap().model.unwrap())
    }

    #[test]
    fn no_operators_keep_the_elite() {
        let (t, _) = self_target(4, 1, 40);
        let cfg = GAConfig { crossover_prob: 0.0, mutation_prob: 0.0, population: 8, ..Default::default() };
        let pop = initial_population(&t, &cfg, Exec::Sequential);
        let next = evolve(&pop, &t, &cfg, 1, Exec::Sequential);
        let b = best_index(&pop);
        assert_eq!(next[0], pop[b]);
        for ind in &next {
            assert!(pop.iter().any(|p| p.genome == ind.genome));
        }
    }

    #[test]
    fn trace_is_monotone_and_deterministic() {
        let (t, _) = self_target(5, 4, 40);
        let cfg = GAConfig { max_generations: 15, tolerance: 0.0, seed: 11, ..Default::default() };
        let mut events = Vec::new();
        let a = tune_to_target(&t, &cfg, Exec::Parallel, &mut |e| events.push(e.best_fitness)).unwrap();
        let b = tune_to_target(&t, &cfg, Exec::Sequential, &mut |_| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(events.len(), 16);
        assert!(events.windows(2).all(|w| w[1] >= w[0]));
        assert!(a.trace.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert!(a.fitness <= 0.0);
        assert_eq!(a.series.len(), 40);
    }

    #[test]
    fn infinite_tolerance_stops_at_generation_zero() {
        let (t, _) = self_target(6, 1, 30);
        let cfg = GAConfig { tolerance: f64::NEG_INFINITY, ..Default::default() };
        let r = tune_to_target(&t, &cfg, Exec::Sequential, &mut |_| {}).unwrap();
        assert_eq!(r.generations, 0);
        assert_eq!(r.trace.len(), 1);
        let pop = initial_population(&t, &cfg, Exec::Sequential);
        assert_eq!(r.fitness, pop[best_index(&pop)].fitness);
    }

    fn own_encoding_pass_count(n: usize, drop_ndiffs: bool) -> usize {
        // known models come from the generator; each is encoded under the
        // layout that matches its own structure
        let mut good = 0;
        for trial in 0..50u64 {
            let (mut t, m) = self_target(100 + trial, 1, n);
            if drop_ndiffs {
                t.names.remove(0);
                t.values.remove(0);
            }
            let p = m.components.iter().map(|c| c.ar_coeffs.len()).max().unwrap();
            let l = GenomeLayout::new(1, p, m.k());
            if fitness(&encode(&m, &l).unwrap(), &t, &l, trial) > -0.5 {
                good += 1;
            }
        }
        good
    }

    #[test]
    fn own_encoding_scores_well() {
        let good = own_encoding_pass_count(200, false);
        assert!(good >= 45, "{good}/50");
    }

    #[test]
    fn own_encoding_scores_well_on_continuous_features() {
        for n in [20, 100] {
            let good = own_encoding_pass_count(n, true);
            assert!(good >= 45, "n={n}: {good}/50");
        }
    }
}
