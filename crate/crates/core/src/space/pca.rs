use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::space::{EmbedMethod, Embedding2D};

/// First two principal components of a dense (already scaled) matrix.
///
/// Each loading vector is oriented so its largest-magnitude entry is
/// positive. Returns the embedding and the two explained variances.
pub fn pca_embed(data: &[Vec<f64>]) -> Result<(Embedding2D, [f64; 2])> {
    let n = data.len();
    if n < 3 {
        return Err(Error::TooShort { need: 3, got: n });
    }
    let p = data[0].len();
    if p == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut x = DMatrix::from_fn(n, p, |i, j| data[i][j]);
    for j in 0..p {
        let m = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-m);
    }
    let cov = x.transpose() * &x / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]).then(a.cmp(b)));
    let mut loadings = Vec::with_capacity(2);
    let mut var = [0.0; 2];
    for (k, &idx) in order.iter().take(2).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let big = v.iter().copied().fold(0.0f64, |acc, a| if a.abs() > acc.abs() { a } else { acc });
        if big < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        loadings.push(v);
        var[k] = eig.eigenvalues[idx].max(0.0);
    }
    if loadings.len() < 2 {
        loadings.push(vec![0.0; p]);
    }
    let points = (0..n)
        .map(|i| {
            let row = x.row(i);
            let c = |v: &Vec<f64>| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            [c(&loadings[0]), c(&loadings[1])]
        })
        .collect();
    Ok((
        Embedding2D {
            points,
            method: EmbedMethod::Pca,
            seed: None,
            params: Default::default(),
            kl_trace: vec![],
            flags: vec![],
        },
        var,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_has_no_second_component() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let (e, var) = pca_embed(&data).unwrap();
        assert!(var[1] < 1e-10);
        assert!(e.points.iter().all(|p| p[1].abs() < 1e-9));
        assert!(var[0] >= var[1]);
    }

    #[test]
    fn planar_input_is_rotated_only() {
        let data: Vec<Vec<f64>> = (0..15)
            .map(|i| {
                let t = i as f64;
                vec![t.sin() * 3.0 + t * 0.2, (t * 0.7).cos()]
            })
            .collect();
        let (e, var) = pca_embed(&data).unwrap();
        assert!(var[0] >= var[1]);
        for i in 0..15 {
            for j in 0..15 {
                let d0 = ((data[i][0] - data[j][0]).powi(2) + (data[i][1] - data[j][1]).powi(2)).sqrt();
                let d1 = ((e.points[i][0] - e.points[j][0]).powi(2) + (e.points[i][1] - e.points[j][1]).powi(2)).sqrt();
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
        // components are uncorrelated
        let c: f64 = e.points.iter().map(|p| p[0] * p[1]).sum();
        assert!(c.abs() < 1e-9);
    }
}
