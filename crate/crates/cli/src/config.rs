//! Flat key=value config files and flag resolution.
//!
//! A config file can supply any flag by its long name; explicit flags win
//! over the file, the file wins over built-in defaults. The data directory
//! is the one setting that can also come from the environment
//! (`GOLDBACH_DATA_DIR`); relative artifact paths resolve against it.

use crate::CliError;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const DATA_DIR_ENV: &str = "GOLDBACH_DATA_DIR";

pub struct Ctx {
    values: HashMap<String, String>,
    data_dir: PathBuf,
}

impl Ctx {
    pub fn new(config_path: Option<&Path>, data_dir_flag: Option<PathBuf>) -> Result<Self, CliError> {
        let values = match config_path {
            Some(path) => parse_config(path)?,
            None => HashMap::new(),
        };
        let data_dir = data_dir_flag
            .or_else(|| values.get("data-dir").map(PathBuf::from))
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Ctx { values, data_dir })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    /// Flag value > config value > default.
    pub fn get<T: FromStr + Clone>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse().map_err(|e| {
                CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
            None => Ok(default),
        }
    }

    /// Like [`Ctx::get`] but resolves relative paths against the data dir.
    pub fn path(&self, key: &str, flag: Option<PathBuf>, default: &str) -> PathBuf {
        let raw = flag
            .or_else(|| self.values.get(key).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(default));
        if raw.is_absolute() {
            raw
        } else {
            self.data_dir.join(raw)
        }
    }
}

fn parse_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Artifact(format!("cannot read config {}: {e}", path.display())))?;
    let mut values = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config {} line {}: expected key=value, got `{line}`",
                path.display(),
                idx + 1
            ))
        })?;
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(values)
}
