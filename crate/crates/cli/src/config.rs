//! Layered settings: command-line flag, then `GRATIS_*` environment
//! variable, then the JSON config file, then the built-in default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const ENV_PREFIX: &str = "GRATIS_";

#[derive(Clone, Debug, Default)]
pub struct Layers {
    file: BTreeMap<String, Value>,
    env: BTreeMap<String, String>,
}

/// `data_dir` -> `GRATIS_DATA_DIR`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_ascii_uppercase().replace('-', "_"))
}

impl Layers {
    /// Reads the process environment and the optional config file.
    pub fn load(config: Option<&Path>) -> CliResult<Self> {
        let env = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        Self::from_parts(config, env)
    }

    pub fn from_parts(config: Option<&Path>, env: BTreeMap<String, String>) -> CliResult<Self> {
        let file = match config {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?;
                match serde_json::from_str(&text) {
                    Ok(Value::Object(m)) => m.into_iter().collect(),
                    Ok(_) => return Err(CliError::usage(format!("config {}: expected a JSON object", p.display()))),
                    Err(e) => return Err(CliError::usage(format!("config {}: {e}", p.display()))),
                }
            }
        };
        Ok(Layers { file, env })
    }

    /// First value found among the flag, the environment and the file.
    pub fn get<T>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr + DeserializeOwned,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        let var = env_name(key);
        if let Some(raw) = self.env.get(&var) {
            return raw.parse().map(Some).map_err(|e| CliError::usage(format!("{var}={raw}: {e}")));
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key `{key}`: {e}"))),
        }
    }

    pub fn get_or<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr + DeserializeOwned,
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }
}
