//! Run configuration shared by the command-line tools: defaults, optional
//! TOML config file, and the mapping onto reconstruction settings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::reconstruct::ReconstructSettings;

/// Environment variable naming an alternative config file path.
pub const CONFIG_PATH_ENV: &str = "NETSKEL_CONFIG";
/// Config file consulted when the environment variable is unset.
pub const DEFAULT_CONFIG_FILE: &str = "netskel.toml";

/// Output serialization choices for graph-shaped results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Dot,
}

/// Knobs shared by every command: frequency resolution, lag horizon,
/// separation tolerance, search budget, RNG seed, and output format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub grid_size: usize,
    pub max_lag: usize,
    pub epsilon: f64,
    pub search_cap: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub target_self_lags: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_size: 1024,
            max_lag: 32,
            epsilon: 1e-6,
            search_cap: 12,
            seed: 0,
            format: OutputFormat::Json,
            target_self_lags: false,
        }
    }
}

/// All-optional mirror of [`RunConfig`] as it appears in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    grid_size: Option<usize>,
    max_lag: Option<usize>,
    epsilon: Option<f64>,
    search_cap: Option<usize>,
    seed: Option<u64>,
    format: Option<OutputFormat>,
    target_self_lags: Option<bool>,
}

impl RunConfig {
    /// Defaults overlaid with the config file, if one exists. The path is
    /// taken from the `NETSKEL_CONFIG` environment variable when set,
    /// otherwise `netskel.toml` in the working directory; a missing file
    /// is not an error, an unreadable or malformed one is.
    pub fn load() -> Result<Self> {
        let (path, required) = match std::env::var_os(CONFIG_PATH_ENV) {
            Some(p) => (PathBuf::from(p), true),
            None => (PathBuf::from(DEFAULT_CONFIG_FILE), false),
        };
        if !path.exists() {
            if required {
                return Err(Error::InvalidInput(format!(
                    "config file {} (from {CONFIG_PATH_ENV}) does not exist",
                    path.display()
                )));
            }
            return Ok(Self::default());
        }
        Self::from_file(&path)
    }

    /// Defaults overlaid with the given config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        if let Some(v) = file.grid_size {
            cfg.grid_size = v;
        }
        if let Some(v) = file.max_lag {
            cfg.max_lag = v;
        }
        if let Some(v) = file.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = file.search_cap {
            cfg.search_cap = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.format {
            cfg.format = v;
        }
        if let Some(v) = file.target_self_lags {
            cfg.target_self_lags = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 4 || self.grid_size % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid size must be an even number of at least 4, got {}",
                self.grid_size
            )));
        }
        if self.max_lag == 0 || 4 * self.max_lag > self.grid_size {
            return Err(Error::InvalidInput(format!(
                "lag horizon {} must be positive and at most a quarter of the grid size {}",
                self.max_lag, self.grid_size
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "separation tolerance must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn reconstruct_settings(&self) -> ReconstructSettings {
        ReconstructSettings {
            max_lag: self.max_lag,
            epsilon: self.epsilon,
            search_cap: self.search_cap,
            target_self_lags: self.target_self_lags,
        }
    }
}
