//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::experiments::AblationMode;
use crate::features::BlockKind;
use crate::pipeline::PipelineConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus manifest (CSV or JSON).
    pub manifest: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub experiments: ExperimentSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Disputed text; defaults to the corpus' only UNKNOWN-author text.
    #[serde(default)]
    pub disputed_id: Option<String>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_min_texts")]
    pub min_texts: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_mode")]
    pub ablation_mode: AblationMode,
    /// Starting pool of the ablation; defaults to the enabled blocks.
    #[serde(default)]
    pub ablation_pool: Option<Vec<BlockKind>>,
    /// Also run the leave-one-out attribution contingency.
    #[serde(default)]
    pub contingency: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("avkit-out")
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_replicas() -> usize {
    10
}
fn default_min_texts() -> usize {
    1
}
fn default_top_k() -> usize {
    10
}
fn default_mode() -> AblationMode {
    AblationMode::Exact
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            disputed_id: None,
            replicas: default_replicas(),
            min_texts: default_min_texts(),
            top_k: default_top_k(),
            ablation_mode: default_mode(),
            ablation_pool: None,
            contingency: false,
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Relative paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Invalid(message) => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let x = &self.experiments;
        if x.replicas == 0 {
            return Err(ConfigError::Invalid("replicas must be positive".into()));
        }
        if !(1..=2).contains(&x.min_texts) {
            return Err(ConfigError::Invalid("min_texts must be 1 or 2".into()));
        }
        if x.top_k == 0 {
            return Err(ConfigError::Invalid("top_k must be positive".into()));
        }
        if let Some(pool) = &x.ablation_pool {
            if pool.is_empty() {
                return Err(ConfigError::Invalid("ablation_pool is empty".into()));
            }
            if let Some(b) = pool.iter().find(|b| !self.pipeline.blocks().contains(b)) {
                return Err(ConfigError::Invalid(format!(
                    "ablation_pool block {b} is not enabled"
                )));
            }
        }
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.manifest, &mut self.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self.pipeline.features.resolve_paths(base);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
