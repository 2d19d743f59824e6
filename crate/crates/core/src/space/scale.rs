use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Rows of feature values with absent cells, plus column names and row ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        let fm = FeatureMatrix { names, ids, rows };
        fm.validate()?;
        Ok(fm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.iter().any(|r| r.len() != self.names.len()) {
            return Err(Error::Parse("every row needs one cell per column".into()));
        }
        if self.ids.len() != self.rows.len() {
            return Err(Error::Parse("one id per row is required".into()));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Stacks matrices with identical columns.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let mut out = FeatureMatrix { names: first.names.clone(), ids: vec![], rows: vec![] };
        for p in parts {
            if p.names != first.names {
                return Err(Error::Parse("feature matrices disagree on columns".into()));
            }
            out.ids.extend(p.ids.iter().cloned());
            out.rows.extend(p.rows.iter().cloned());
        }
        Ok(out)
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).ok_or_else(|| Error::UnknownFeature(n.clone())))
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            names: names.to_vec(),
            ids: self.ids.clone(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }
}

/// Column-wise robust scaling parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub names: Vec<String>,
    pub medians: Vec<f64>,
    /// Divisors: the interquartile range, or 1 when it is 0.
    pub scales: Vec<f64>,
}

impl RobustScaler {
    /// Medians and interquartile ranges of the present cells of each column.
    pub fn fit(fm: &FeatureMatrix) -> Self {
        let mut medians = Vec::with_capacity(fm.names.len());
        let mut scales = Vec::with_capacity(fm.names.len());
        for j in 0..fm.names.len() {
            let mut col: Vec<f64> = fm.rows.iter().filter_map(|r| r[j]).filter(|v| v.is_finite()).collect();
            if col.is_empty() {
                medians.push(0.0);
                scales.push(1.0);
                continue;
            }
            col.sort_by(f64::total_cmp);
            let iqr = quantile_sorted(&col, 0.75) - quantile_sorted(&col, 0.25);
            medians.push(quantile_sorted(&col, 0.5));
            scales.push(if iqr > 0.0 { iqr } else { 1.0 });
        }
        RobustScaler { names: fm.names.clone(), medians, scales }
    }

    /// Scales one row; absent cells become 0, i.e. the column median.
    pub fn transform_row(&self, row: &[Option<f64>]) -> Vec<f64> {
        row.iter()
            .zip(self.medians.iter().zip(&self.scales))
            .map(|(v, (m, s))| match v {
                Some(x) if x.is_finite() => (x - m) / s,
                _ => 0.0,
            })
            .collect()
    }
}

/// Robust-scaled dense matrix with a record of imputed cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMatrix {
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
    /// `(row, column)` of every imputed cell.
    pub imputed: Vec<(usize, usize)>,
    pub scaler: RobustScaler,
}

/// Subtracts column medians, divides by interquartile ranges and fills
/// absent cells with the median.
pub fn scale_feature_matrix(fm: &FeatureMatrix) -> ScaledMatrix {
    let scaler = RobustScaler::fit(fm);
    let mut imputed = Vec::new();
    for (i, r) in fm.rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            if !v.is_some_and(|x| x.is_finite()) {
                imputed.push((i, j));
            }
        }
    }
    let data = fm.rows.iter().map(|r| scaler.transform_row(r)).collect();
    ScaledMatrix { names: fm.names.clone(), data, imputed, scaler }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(cols: &[&[Option<f64>]]) -> FeatureMatrix {
        let n = cols[0].len();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new((0..cols.len()).map(|j| format!("c{j}")).collect(), rows).unwrap()
    }

    #[test]
    fn hand_column() {
        let s = scale_feature_matrix(&fm(&[&[Some(0.0), Some(10.0), Some(20.0)]]));
        let col: Vec<f64> = s.data.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.scaler.scales[0], 10.0);
    }

    #[test]
    fn constant_column_and_imputation() {
        let s = scale_feature_matrix(&fm(&[&[Some(3.0), Some(3.0), Some(3.0)], &[Some(1.0), None, Some(5.0)]]));
        assert!(s.data.iter().all(|r| r[0] == 0.0));
        assert_eq!(s.data[1][1], 0.0);
        assert_eq!(s.imputed, vec![(1, 1)]);
    }

    #[test]
    fn scaled_medians_are_zero_and_iqrs_unit() {
        let a: Vec<Option<f64>> = (0..17).map(|i| Some((i * i) as f64)).collect();
        let b: Vec<Option<f64>> = (0..17).map(|i| Some(if i < 14 { 2.0 } else { i as f64 })).collect();
        let s = scale_feature_matrix(&fm(&[&a, &b]));
        for j in 0..2 {
            let mut c: Vec<f64> = s.data.iter().map(|r| r[j]).collect();
            c.sort_by(f64::total_cmp);
            assert!(quantile_sorted(&c, 0.5).abs() < 1e-12);
            let iqr = quantile_sorted(&c, 0.75) - quantile_sorted(&c, 0.25);
            assert!(iqr.abs() < 1e-12 || (iqr - 1.0).abs() < 1e-12);
        }
    }
}
