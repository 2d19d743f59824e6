use thiserror::Error;

/// Errors raised by the generation, feature, embedding, tuning and
/// forecasting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("history has {got} values but the model needs {need}")]
    InsufficientHistory { need: usize, got: usize },

    #[error("simulated value left the representable range at step {step}")]
    NonFiniteSample { step: usize },

    #[error("gave up after {attempts} consecutive explosive parameter draws")]
    RetryExhausted { attempts: usize },

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("series too short: need at least {need} observations, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("regression design matrix is singular")]
    SingularDesign,

    #[error("GARCH(1,1) fit failed")]
    GarchFitFailed,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("MASE scale is zero (in-sample seasonal naive errors vanish)")]
    ZeroScale,

    #[error("design is degenerate: {0}")]
    DegenerateDesign(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
