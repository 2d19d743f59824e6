use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of bins per axis.
pub const DEFAULT_BINS: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub nb: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub occupied_a: Vec<bool>,
    pub occupied_b: Vec<bool>,
}

fn axis_range(vals: impl Iterator<Item = f64>) -> [f64; 2] {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi - lo > 0.0 {
        [lo, hi]
    } else {
        [lo - 0.5, hi + 0.5]
    }
}

fn bin(v: f64, r: [f64; 2], nb: usize) -> usize {
    let f = (v - r[0]) / (r[1] - r[0]);
    ((f * nb as f64).floor().max(0.0) as usize).min(nb - 1)
}

impl CoverageGrid {
    /// Grid spanning the combined range of both point sets.
    pub fn build(a: &[[f64; 2]], b: &[[f64; 2]], nb: usize) -> Result<Self> {
        let both = || a.iter().chain(b);
        let x_range = axis_range(both().map(|p| p[0]));
        let y_range = axis_range(both().map(|p| p[1]));
        Self::with_ranges(a, b, nb, x_range, y_range)
    }

    /// Grid with caller-supplied ranges; points outside are clamped to the
    /// border cells.
    pub fn with_ranges(a: &[[f64; 2]], b: &[[f64; 2]], nb: usize, x_range: [f64; 2], y_range: [f64; 2]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if nb < 2 {
            return Err(Error::InvalidConfig("at least 2 bins are required".into()));
        }
        if a.iter().chain(b).any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Parse("embedding contains non-finite coordinates".into()));
        }
        let occ = |pts: &[[f64; 2]]| {
            let mut o = vec![false; nb * nb];
            for p in pts {
                o[bin(p[1], y_range, nb) * nb + bin(p[0], x_range, nb)] = true;
            }
            o
        };
        Ok(CoverageGrid { nb, x_range, y_range, occupied_a: occ(a), occupied_b: occ(b) })
    }

    /// Cells occupied by B but not A, divided by the total number of cells.
    pub fn miscoverage_ab(&self) -> f64 {
        let c = self.occupied_a.iter().zip(&self.occupied_b).filter(|(a, b)| !**a && **b).count();
        c as f64 / (self.nb * self.nb) as f64
    }

    pub fn miscoverage_ba(&self) -> f64 {
        let c = self.occupied_a.iter().zip(&self.occupied_b).filter(|(a, b)| **a && !**b).count();
        c as f64 / (self.nb * self.nb) as f64
    }

    pub fn report(&self) -> CoverageReport {
        CoverageReport {
            nb: self.nb,
            x_range: self.x_range,
            y_range: self.y_range,
            miscoverage_ab: self.miscoverage_ab(),
            miscoverage_ba: self.miscoverage_ba(),
            occupied_a: self.occupied_a.iter().filter(|v| **v).count(),
            occupied_b: self.occupied_b.iter().filter(|v| **v).count(),
        }
    }
}

/// Serializable coverage summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub nb: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub miscoverage_ab: f64,
    pub miscoverage_ba: f64,
    pub occupied_a: usize,
    pub occupied_b: usize,
}

/// Miscoverage of dataset A over dataset B.
pub fn miscoverage(a: &[[f64; 2]], b: &[[f64; 2]], nb: usize) -> Result<f64> {
    Ok(CoverageGrid::build(a, b, nb)?.miscoverage_ab())
}
