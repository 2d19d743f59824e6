use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gratis::features::{compute_batch, FeatureSelection};
use gratis::forecast::{build_training_table, ForecastMethod, Horizons};
use gratis::generator::{generate_batch, GeneratorConfig};
use gratis::space::{scale_feature_matrix, tsne_embed, FeatureMatrix, TsneConfig};
use gratis::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    g.sample_size(10);
    for (period, len, count) in [(1usize, 20usize, 1000usize), (12, 300, 100)] {
        let cfg = GeneratorConfig::for_period(period).with_length(len);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("p{period}_n{len}_x{count}")), &cfg, |b, cfg| {
                b.iter(|| black_box(generate_batch(cfg, count, 1, exec).unwrap()))
            });
        }
    }
    g.finish();
}

fn features(c: &mut Criterion) {
    let series = generate_batch(&GeneratorConfig::for_period(12).with_length(120), 64, 2, Exec::Parallel).unwrap();
    let sel = FeatureSelection::all();
    let mut g = c.benchmark_group("features");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "monthly_x64"), |b| {
            b.iter(|| black_box(compute_batch(&series, &sel, exec)))
        });
    }
    g.finish();
}

fn embedding(c: &mut Criterion) {
    let series = generate_batch(&GeneratorConfig::for_period(1).with_length(40), 300, 3, Exec::Parallel).unwrap();
    let fvs = compute_batch(&series, &FeatureSelection::all(), Exec::Parallel);
    let fm = FeatureMatrix::new(fvs[0].names.clone(), fvs.into_iter().map(|f| f.values).collect()).unwrap();
    let data = scale_feature_matrix(&fm).data;
    let cfg = TsneConfig { iterations: 300, perplexity: 20.0, ..Default::default() };
    let mut g = c.benchmark_group("tsne");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "n300"), |b| b.iter(|| black_box(tsne_embed(&data, &cfg, exec).unwrap())));
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let series = generate_batch(&GeneratorConfig::for_period(1).with_length(40), 200, 4, Exec::Parallel).unwrap();
    let h = Horizons::default();
    let mut g = c.benchmark_group("training_table");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "yearly_x200"), |b| {
            b.iter(|| black_box(build_training_table(&series, &ForecastMethod::ALL, &h, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, generation, features, embedding, evaluation);
criterion_main!(benches);
