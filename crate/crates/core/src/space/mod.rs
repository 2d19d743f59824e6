//! Two-dimensional instance spaces and the grid miscoverage measure.

pub mod coverage;
pub mod pca;
pub mod scale;
pub mod tsne;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use coverage::{miscoverage, CoverageGrid, CoverageReport, DEFAULT_BINS};
pub use pca::pca_embed;
pub use scale::{scale_feature_matrix, FeatureMatrix, RobustScaler, ScaledMatrix};
pub use tsne::{tsne_embed, TsneConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Pca,
    Tsne,
}

impl EmbedMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbedMethod::Pca => "pca",
            EmbedMethod::Tsne => "tsne",
        }
    }
}

impl std::str::FromStr for EmbedMethod {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "pca" => Ok(EmbedMethod::Pca),
            "tsne" => Ok(EmbedMethod::Tsne),
            other => Err(crate::Error::Parse(format!("unknown embedding method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    pub method: EmbedMethod,
    pub seed: Option<u64>,
    /// Hyperparameters actually used.
    pub params: BTreeMap<String, f64>,
    /// `(iteration, KL divergence)` pairs recorded during optimisation.
    pub kl_trace: Vec<(usize, f64)>,
    pub flags: Vec<String>,
}
