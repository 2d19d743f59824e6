//! Exact t-SNE with dense affinities.

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{for_each_chunk_mut, map_range, Exec};
use crate::rng::stream;
use crate::space::{EmbedMethod, Embedding2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// `None` selects `max(50, n / 12)`.
    pub learning_rate: Option<f64>,
    /// KL divergence is recorded every this many iterations, and every 10
    /// iterations during the last 100.
    pub cost_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            learning_rate: None,
            cost_every: 50,
        }
    }
}

/// Tolerance on the entropy match `|H - ln(perplexity)|`.
pub const PERPLEXITY_TOL: f64 = 1e-5;

/// Gaussian conditional affinities of one point given squared distances to
/// all others (`self_index` is excluded). Returns the row (summing to 1),
/// the precision and the attained entropy.
pub fn conditional_row(dist2: &[f64], self_index: usize, perplexity: f64) -> (Vec<f64>, f64, f64) {
    let n = dist2.len();
    let target = perplexity.ln();
    let dmin = dist2
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != self_index)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = dist2.iter().map(|d| d - dmin).collect();
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut row = vec![0.0; n];
    let mut h = 0.0;
    for _ in 0..200 {
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for j in 0..n {
            if j == self_index {
                row[j] = 0.0;
                continue;
            }
            let v = (-beta * shifted[j]).exp();
            row[j] = v;
            sum += v;
            dsum += shifted[j] * v;
        }
        h = sum.ln() + beta * dsum / sum;
        for v in row.iter_mut() {
            *v /= sum;
        }
        let gap = h - target;
        if gap.abs() < PERPLEXITY_TOL {
            break;
        }
        if gap > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    (row, beta, h)
}

/// Embeds the rows of `data` in two dimensions.
pub fn tsne_embed(data: &[Vec<f64>], cfg: &TsneConfig, exec: Exec) -> Result<Embedding2D> {
    let n = data.len();
    if n < 4 {
        return Err(Error::TooShort { need: 4, got: n });
    }
    let mut flags = Vec::new();
    let cap = (n as f64 - 1.0) / 3.0;
    let perplexity = if cfg.perplexity >= cap {
        let p = (cap - 1.0).max(1.0);
        flags.push(format!("perplexity {} too high for {} rows, capped at {}", cfg.perplexity, n, p));
        p
    } else {
        cfg.perplexity
    };

    // conditional affinities, one row per point
    let mut p = vec![0f32; n * n];
    let misses = std::sync::atomic::AtomicUsize::new(0);
    for_each_chunk_mut(exec, &mut p, n, |i, out| {
        let xi = &data[i];
        let d: Vec<f64> = data
            .iter()
            .map(|xj| xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let (row, _, h) = conditional_row(&d, i, perplexity);
        if (h - perplexity.ln()).abs() >= PERPLEXITY_TOL {
            misses.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        for (o, v) in out.iter_mut().zip(row) {
            *o = v as f32;
        }
    });
    let misses = misses.into_inner();
    if misses > 0 {
        flags.push(format!("{misses} rows missed the perplexity tolerance"));
    }
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in i + 1..n {
            let v = ((p[i * n + j] as f64 + p[j * n + i] as f64) / denom) as f32;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    let total: f64 = p.iter().map(|v| *v as f64).sum();
    let plogp: f64 = p.iter().filter(|v| **v > 0.0).map(|v| (*v as f64 / total) * (*v as f64 / total).ln()).sum();

    let mut rng = stream(cfg.seed, &[0x7473_6e65]);
    let init = Normal::new(0.0, 1e-4).expect("valid sd");
    let mut ys: Vec<[f64; 2]> = (0..n).map(|_| [rng.sample(init), rng.sample(init)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let lr = cfg.learning_rate.unwrap_or_else(|| (n as f64 / 12.0).max(50.0));
    let mut kl_trace = Vec::new();

    for it in 0..cfg.iterations {
        let exag = if it < cfg.exaggeration_iterations { cfg.early_exaggeration } else { 1.0 };
        let momentum = if it < cfg.exaggeration_iterations { cfg.initial_momentum } else { cfg.final_momentum };
        let record = it % cfg.cost_every.max(1) == 0
            || (it + 100 >= cfg.iterations && (cfg.iterations - 1 - it) % 10 == 0);
        let xs: Vec<f64> = ys.iter().map(|v| v[0]).collect();
        let yv: Vec<f64> = ys.iter().map(|v| v[1]).collect();
        let parts: Vec<[f64; 6]> = map_range(exec, n, |i| {
            let prow = &p[i * n..(i + 1) * n];
            let (xi, yi) = (xs[i], yv[i]);
            let (mut z, mut ax, mut ay, mut bx, mut by, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..n {
                let dx = xi - xs[j];
                let dy = yi - yv[j];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let pij = prow[j] as f64;
                z += w;
                let pw = pij * w;
                ax += pw * dx;
                ay += pw * dy;
                let ww = w * w;
                bx += ww * dx;
                by += ww * dy;
            }
            if record {
                for j in 0..n {
                    let pij = prow[j] as f64;
                    if pij > 0.0 {
                        let dx = xi - xs[j];
                        let dy = yi - yv[j];
                        c += pij * (1.0 + dx * dx + dy * dy).ln();
                    }
                }
            }
            [z - 1.0, ax, ay, bx, by, c]
        });
        let zsum: f64 = parts.iter().map(|r| r[0]).sum();
        if record {
            // KL = sum p log p + sum p log(1 + d^2) + log Z, with p renormalised
            let c: f64 = parts.iter().map(|r| r[5]).sum::<f64>() / total;
            kl_trace.push((it, plogp + c + zsum.ln()));
        }
        for i in 0..n {
            let r = &parts[i];
            for k in 0..2 {
                let g = 4.0 * (exag * r[1 + k] - r[3 + k] / zsum);
                let same = (g > 0.0) == (update[i][k] > 0.0);
                gains[i][k] = if same { (gains[i][k] * 0.8).max(0.01) } else { gains[i][k] + 0.2 };
                update[i][k] = momentum * update[i][k] - lr * gains[i][k] * g;
                ys[i][k] += update[i][k];
            }
        }
        let mx = ys.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let my = ys.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        for v in ys.iter_mut() {
            v[0] -= mx;
            v[1] -= my;
        }
        if ys.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::Parse("t-SNE diverged to non-finite coordinates".into()));
        }
    }

    if !kl_tail_non_increasing(&kl_trace, cfg.iterations) {
        flags.push("KL divergence increased during the last 100 iterations".into());
    }
    let mut params = std::collections::BTreeMap::new();
    params.insert("perplexity".to_string(), perplexity);
    params.insert("iterations".to_string(), cfg.iterations as f64);
    params.insert("learning_rate".to_string(), lr);
    params.insert("early_exaggeration".to_string(), cfg.early_exaggeration);
    Ok(Embedding2D {
        points: ys,
        method: EmbedMethod::Tsne,
        seed: Some(cfg.seed),
        params,
        kl_trace,
        flags,
    })
}

/// Whether the recorded KL values from the last 100 iterations never rise.
pub fn kl_tail_non_increasing(trace: &[(usize, f64)], iterations: usize) -> bool {
    let tail: Vec<f64> = trace.iter().filter(|(it, _)| it + 100 >= iterations).map(|(_, v)| *v).collect();
    tail.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn clusters(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut r = stream(seed, &[]);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for c in 0..2 {
            for _ in 0..50 {
                let centre = if c == 0 { -5.0 } else { 5.0 };
                data.push((0..5).map(|_| centre + r.sample::<f64, _>(StandardNormal)).collect());
                labels.push(c);
            }
        }
        (data, labels)
    }

    #[test]
    fn rows_hit_perplexity_and_sum_to_one() {
        let (data, _) = clusters(1);
        for i in [0, 17, 99] {
            let d: Vec<f64> = data.iter().map(|x| x.iter().zip(&data[i]).map(|(a, b)| (a - b).powi(2)).sum()).collect();
            let (row, _, h) = conditional_row(&d, i, 20.0);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!((h - 20f64.ln()).abs() < PERPLEXITY_TOL);
            assert_eq!(row[i], 0.0);
        }
    }

    fn two_means_agreement(points: &[[f64; 2]], labels: &[usize]) -> f64 {
        let mut c = [points[0], points[points.len() - 1]];
        let mut assign = vec![0; points.len()];
        for _ in 0..50 {
            for (i, p) in points.iter().enumerate() {
                let d = |q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                assign[i] = if d(c[0]) <= d(c[1]) { 0 } else { 1 };
            }
            for k in 0..2 {
                let m: Vec<&[f64; 2]> = points.iter().zip(&assign).filter(|(_, a)| **a == k).map(|(p, _)| p).collect();
                if !m.is_empty() {
                    c[k] = [m.iter().map(|p| p[0]).sum::<f64>() / m.len() as f64, m.iter().map(|p| p[1]).sum::<f64>() / m.len() as f64];
                }
            }
        }
        let hits = assign.iter().zip(labels).filter(|(a, l)| a == l).count() as f64 / labels.len() as f64;
        hits.max(1.0 - hits)
    }

    #[test]
    fn separates_two_clusters() {
        let (data, labels) = clusters(2);
        let cfg = TsneConfig { seed: 3, ..Default::default() };
        let e = tsne_embed(&data, &cfg, Exec::Parallel).unwrap();
        assert!(two_means_agreement(&e.points, &labels) >= 0.95);
        assert!(e.points.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
        assert!(kl_tail_non_increasing(&e.kl_trace, 1000), "{:?}", &e.kl_trace[e.kl_trace.len() - 12..]);
    }

    #[test]
    fn deterministic_across_modes() {
        let (data, _) = clusters(4);
        let cfg = TsneConfig { seed: 9, iterations: 300, perplexity: 10.0, ..Default::default() };
        let a = tsne_embed(&data, &cfg, Exec::Sequential).unwrap();
        let b = tsne_embed(&data, &cfg, Exec::Parallel).unwrap();
        let c = tsne_embed(&data, &cfg, Exec::Parallel).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(b.points, c.points);
    }

    #[test]
    fn perplexity_is_capped() {
        let (data, _) = clusters(5);
        let small: Vec<Vec<f64>> = data[..10].to_vec();
        let e = tsne_embed(&small, &TsneConfig { iterations: 50, ..Default::default() }, Exec::Sequential).unwrap();
        assert!(e.params["perplexity"] < 3.0);
        assert!(!e.flags.is_empty());
    }
}
