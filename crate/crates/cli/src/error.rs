use std::fmt;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs or schema violations (exit 2).
    Usage(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

impl From<gratis::Error> for CliError {
    fn from(e: gratis::Error) -> Self {
        use gratis::Error::*;
        let msg = match &e {
            UnknownFeature(n) => {
                format!("unknown feature `{n}`; valid names: {}", gratis::features::canonical_names().join(", "))
            }
            _ => e.to_string(),
        };
        match e {
            InvalidConfig(_) | UnknownFeature(_) | Parse(_) | Io(_) | Json(_) | Csv(_) | TooShort { .. }
            | EmptyDataset | DegenerateDesign(_) => CliError::Usage(msg),
            _ => CliError::Internal(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
