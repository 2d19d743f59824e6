//! Synthetic time series generation from mixture autoregressive models,
//! feature extraction, instance-space coverage, GA tuning toward target
//! features and feature-based forecast selection.

pub mod error;
pub mod exec;
pub mod features;
pub mod forecast;
pub mod formats;
pub mod generator;
pub mod mar;
pub mod regress;
pub mod rng;
pub mod series;
pub mod space;
pub mod stats;
pub mod tune;

pub use error::{Error, Result};
pub use exec::Exec;
pub use mar::{MARModel, SeasonalARComponent};
pub use series::TimeSeries;
