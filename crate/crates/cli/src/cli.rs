//! Argument definitions and command dispatch.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use gratis::forecast::{ForecastMethod, LassoConfig};
use gratis::formats::{
    read_embedding_file, read_feature_file, read_json, read_series_file, write_embedding_file, write_feature_file,
    write_json, write_series_file, EmbeddingTable, SeriesFormat,
};
use gratis::space::{EmbedMethod, TsneConfig, DEFAULT_BINS};
use gratis::Exec;

use crate::commands::{
    run_coverage, run_embed, run_features, run_generate, run_recommend, run_train_meta, run_tune, EmbedRequest,
    GaOverrides, GenerateRequest, TrainRequest, TuneRequest,
};
use crate::config::Layers;
use crate::error::{CliError, CliResult};
use crate::service::{self, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "gratis", version, about = "Generate, characterise and tune time series; select forecasting methods")]
pub struct Cli {
    /// JSON file with default settings (flags and GRATIS_* variables win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a batch of series from random mixture autoregressive models.
    Generate(GenerateArgs),
    /// Compute the feature table of a series file.
    Features(FeaturesArgs),
    /// Embed one or more feature tables in a shared 2-D space.
    Embed(EmbedArgs),
    /// Grid miscoverage between two datasets.
    Coverage(CoverageArgs),
    /// Evolve series whose features approach a target.
    Tune(TuneArgs),
    /// Fit per-method MASE predictors on a training corpus.
    TrainMeta(TrainMetaArgs),
    /// Pick a forecasting method for each row of a feature table.
    Recommend(RecommendArgs),
    /// Run the HTTP job service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, conflicts_with = "length_pool")]
    pub length: Option<usize>,
    /// Comma-separated lengths to draw from.
    #[arg(long, value_delimiter = ',')]
    pub length_pool: Option<Vec<usize>>,
    /// Comma-separated periods for multi-seasonal series.
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<usize>>,
    /// Comma-separated mixing weights, one per period.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub out: PathBuf,
    /// jsonl or csv; defaults to the output extension.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct EmbedOpts {
    /// pca or tsne.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Feature CSVs embedded jointly.
    #[arg(short, long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// One output CSV per input.
    #[arg(short, long, required = true, num_args = 1..)]
    pub out: Vec<PathBuf>,
    #[command(flatten)]
    pub opts: EmbedOpts,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Embedding CSV, or feature CSV to embed jointly with `--b`.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Optional JSON report.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub opts: EmbedOpts,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    /// Target as name=value; repeat for several features.
    #[arg(long = "feature", required = true)]
    pub features: Vec<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub crossover_prob: Option<f64>,
    #[arg(long)]
    pub mutation_prob: Option<f64>,
    #[arg(long)]
    pub mutation_scale: Option<f64>,
    #[arg(long)]
    pub tournament_size: Option<usize>,
    #[arg(long)]
    pub elitism: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Directory for series.jsonl and result.json.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainMetaArgs {
    /// Training series file.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Meta-model JSON.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Also write the training table as JSON.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub n_lambda: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    /// JSON output; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub cors_origin: Option<String>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let layers = Layers::load(cli.config.as_deref())?;
    let exec_name = layers.get_or(cli.sequential.then(|| "sequential".to_string()), "exec", "parallel".into())?;
    let exec = match exec_name.as_str() {
        "parallel" => Exec::Parallel,
        "sequential" => Exec::Sequential,
        other => return Err(CliError::usage(format!("exec must be parallel or sequential, got `{other}`"))),
    };
    match cli.command {
        Command::Generate(a) => generate(a, &layers, exec),
        Command::Features(a) => features(a, exec),
        Command::Embed(a) => embed(a, &layers, exec),
        Command::Coverage(a) => coverage(a, &layers, exec),
        Command::Tune(a) => tune(a, &layers, exec),
        Command::TrainMeta(a) => train_meta(a, &layers, exec),
        Command::Recommend(a) => recommend(a),
        Command::Serve(a) => serve(a, &layers, exec),
    }
}

fn generate(a: GenerateArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    let req = GenerateRequest {
        period: l.get_or(a.period, "period", 1)?,
        count: l.get(a.count, "count")?.ok_or_else(|| CliError::usage("--count is required"))?,
        length: l.get(a.length, "length")?,
        length_pool: a.length_pool,
        periods: a.periods,
        weights: a.weights,
        seed: l.get_or(a.seed, "seed", 0)?,
    };
    let format = match l.get(a.format, "format")? {
        Some(f) => f.parse::<SeriesFormat>()?,
        None => SeriesFormat::from_path(&a.out),
    };
    let recs = run_generate(&req, exec)?;
    write_series_file(&a.out, format, &recs)?;
    let period = req.periods.as_ref().map_or(req.period.to_string(), |p| {
        p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    });
    println!("generated {} series (period {period}, seed {}) -> {}", recs.len(), req.seed, a.out.display());
    Ok(())
}

fn features(a: FeaturesArgs, exec: Exec) -> CliResult<()> {
    let recs = read_series_file(&a.input)?;
    let fm = run_features(&recs, exec)?;
    write_feature_file(&a.out, &fm)?;
    println!("features: {} rows x {} columns -> {}", fm.n_rows(), fm.names.len(), a.out.display());
    Ok(())
}

fn embed_request(o: &EmbedOpts, l: &Layers) -> CliResult<EmbedRequest> {
    let method: EmbedMethod = l.get_or(o.method.clone(), "method", "tsne".to_string())?.parse()?;
    let d = TsneConfig::default();
    let tsne = TsneConfig {
        perplexity: l.get_or(o.perplexity, "perplexity", d.perplexity)?,
        iterations: l.get_or(o.iterations, "iterations", d.iterations)?,
        seed: l.get_or(o.seed, "seed", d.seed)?,
        ..d
    };
    Ok(EmbedRequest { method, tsne })
}

fn embed(a: EmbedArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    if a.input.len() != a.out.len() {
        return Err(CliError::usage("give one --out per --input"));
    }
    let req = embed_request(&a.opts, l)?;
    let parts = a.input.iter().map(|p| read_feature_file(p)).collect::<gratis::Result<Vec<_>>>()?;
    let tables = run_embed(&parts, &req, exec)?;
    for (t, p) in tables.iter().zip(&a.out) {
        write_embedding_file(p, t)?;
    }
    let n: usize = tables.iter().map(|t| t.ids.len()).sum();
    println!("embedded {n} rows with {} -> {}", req.method.as_str(), a.out.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
    Ok(())
}

fn is_embedding(path: &Path) -> CliResult<bool> {
    let f = std::fs::File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut first = String::new();
    std::io::BufReader::new(f).read_line(&mut first)?;
    Ok(first.trim_end() == "id,comp1,comp2,method,seed")
}

fn coverage(a: CoverageArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    let bins = l.get_or(a.bins, "bins", DEFAULT_BINS)?;
    let (ea, eb): (EmbeddingTable, EmbeddingTable) = match (is_embedding(&a.a)?, is_embedding(&a.b)?) {
        (true, true) => (read_embedding_file(&a.a)?, read_embedding_file(&a.b)?),
        (false, false) => {
            let parts = vec![read_feature_file(&a.a)?, read_feature_file(&a.b)?];
            let mut t = run_embed(&parts, &embed_request(&a.opts, l)?, exec)?;
            let eb = t.pop().expect("two tables");
            (t.pop().expect("two tables"), eb)
        }
        _ => return Err(CliError::usage("--a and --b must both be embeddings or both be feature tables")),
    };
    let rep = run_coverage(&ea, &eb, bins)?;
    println!("miscoverage(A,B) = {}", rep.miscoverage_ab);
    println!("miscoverage(B,A) = {}", rep.miscoverage_ba);
    if let Some(out) = &a.out {
        write_json(out, &rep)?;
    }
    Ok(())
}

fn parse_targets(items: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for it in items {
        let (name, value) =
            it.split_once('=').ok_or_else(|| CliError::usage(format!("--feature expects name=value, got `{it}`")))?;
        let v: f64 = value.trim().parse().map_err(|_| CliError::usage(format!("`{value}` is not a number in `{it}`")))?;
        if out.insert(name.trim().to_string(), v).is_some() {
            return Err(CliError::usage(format!("feature `{name}` given twice")));
        }
    }
    Ok(out)
}

fn tune(a: TuneArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    let ga = GaOverrides {
        population: l.get(a.population, "population")?,
        max_generations: l.get(a.generations, "generations")?,
        crossover_prob: l.get(a.crossover_prob, "crossover_prob")?,
        mutation_prob: l.get(a.mutation_prob, "mutation_prob")?,
        mutation_scale: l.get(a.mutation_scale, "mutation_scale")?,
        tournament_size: l.get(a.tournament_size, "tournament_size")?,
        elitism: l.get(a.elitism, "elitism")?,
        tolerance: l.get(a.tolerance, "tolerance")?,
        k_fixed: None,
        p_fixed: None,
    };
    let req = TuneRequest {
        period: l.get_or(a.period, "period", 1)?,
        length: l.get(a.length, "length")?.ok_or_else(|| CliError::usage("--length is required"))?,
        targets: parse_targets(&a.features)?,
        count: l.get_or(a.count, "count", 1)?,
        seed: l.get_or(a.seed, "seed", 0)?,
        ga,
    };
    req.target()?;
    let bundle = run_tune(&req, exec, &mut |_| {})?;
    std::fs::create_dir_all(&a.out)?;
    write_series_file(&a.out.join("series.jsonl"), SeriesFormat::Jsonl, &bundle.series)?;
    write_json(&a.out.join("result.json"), &bundle)?;
    for r in &bundle.results {
        println!("{}: fitness {} after {} generations", r.id, r.fitness, r.generations);
    }
    println!("-> {}", a.out.display());
    Ok(())
}

fn train_meta(a: TrainMetaArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    let d = TrainRequest::default();
    let methods = match a.methods {
        Some(m) => m.iter().map(|s| s.parse::<ForecastMethod>()).collect::<gratis::Result<Vec<_>>>()?,
        None => d.methods,
    };
    let lasso = LassoConfig {
        tau: l.get_or(a.tau, "tau", d.lasso.tau)?,
        folds: l.get_or(a.folds, "folds", d.lasso.folds)?,
        n_lambda: l.get_or(a.n_lambda, "n_lambda", d.lasso.n_lambda)?,
        lambdas: None,
    };
    let req = TrainRequest { methods, horizons: d.horizons, lasso };
    let recs = read_series_file(&a.input)?;
    let (table, meta) = run_train_meta(&recs, &req, exec)?;
    write_json(&a.out, &meta)?;
    if let Some(p) = &a.table {
        write_json(p, &table)?;
    }
    println!(
        "trained on {} series ({} skipped), {} features kept -> {}",
        table.features.n_rows(),
        table.skipped.len(),
        meta.used_features.len(),
        a.out.display()
    );
    Ok(())
}

fn recommend(a: RecommendArgs) -> CliResult<()> {
    let meta = read_json(&a.model)?;
    let fm = read_feature_file(&a.input)?;
    let rows = run_recommend(&meta, &fm)?;
    match &a.out {
        Some(p) => {
            write_json(p, &rows)?;
            println!("recommended methods for {} rows -> {}", rows.len(), p.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&rows)?),
    }
    Ok(())
}

fn serve(a: ServeArgs, l: &Layers, exec: Exec) -> CliResult<()> {
    let port: u16 = l.get_or(a.port, "port", 8080)?;
    let host: String = l.get_or(a.host, "host", "127.0.0.1".into())?;
    let data_dir: PathBuf = l.get_or(a.data_dir, "data_dir", PathBuf::from("gratis-data"))?;
    let workers = l.get_or(a.workers, "workers", std::thread::available_parallelism().map_or(1, |n| n.get()))?;
    let cors_origin = l.get(a.cors_origin, "cors_origin")?;
    let addr: std::net::SocketAddr =
        format!("{host}:{port}").parse().map_err(|e| CliError::usage(format!("address {host}:{port}: {e}")))?;
    let cfg = ServiceConfig { data_dir, workers, cors_origin, exec };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(service::serve(addr, cfg)).map_err(|e| CliError::Internal(e.to_string()))
}
