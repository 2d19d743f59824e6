use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mar::MARModel;

/// Where a generated series came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<MARModel>,
    /// Component models of a multi-seasonal series, one per period.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<MARModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mix_weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub periods: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SeriesMeta>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, periods: Vec<usize>) -> Result<Self> {
        let ts = TimeSeries { values, periods, meta: None };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Parse("series has no values".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("series contains non-finite values".into()));
        }
        if self.periods.is_empty() || self.periods[0] == 0 {
            return Err(Error::Parse("periods must be nonempty and positive".into()));
        }
        if self.periods.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Parse("periods must be sorted ascending".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest seasonal period (1 for non-seasonal data).
    pub fn max_period(&self) -> usize {
        *self.periods.last().unwrap_or(&1)
    }

    /// Periods greater than one.
    pub fn seasonal_periods(&self) -> Vec<usize> {
        self.periods.iter().copied().filter(|p| *p > 1).collect()
    }

    pub fn with_meta(mut self, meta: SeriesMeta) -> Self {
        self.meta = Some(meta);
        self
    }
}

/// Centres and scales a series to zero mean and unit standard deviation.
pub fn standardize_series(ts: &TimeSeries) -> Result<TimeSeries> {
    Ok(TimeSeries {
        values: crate::stats::standardize(&ts.values)?,
        periods: ts.periods.clone(),
        meta: ts.meta.clone(),
    })
}
