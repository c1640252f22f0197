//! Versioned run configuration: a TOML file merged with command-line flags.
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [model]
//! variant = "CNN_BILSTM_EA_EMOJI"
//! embed_dim = 200
//!
//! [train]
//! lr = 1e-5
//! epochs = 150
//!
//! [paths]
//! train = "data/train.jsonl"
//! val = "data/val.jsonl"
//! embeddings = "glove.twitter.200d.txt"
//! ```
//!
//! Relative paths are resolved against the working directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use eann::model::ModelConfig;
use eann::train::TrainConfig;

use crate::UsageError;

pub const CONFIG_VERSION: u32 = 1;
pub const SEED_ENV: &str = "EA_SEED";
pub const RESOLVED_NAME: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Emotion sidecar attached to every loaded dataset.
    pub emotion: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Seeds the split, initialization, shuffling and dropout. Overrides
    /// `model.seed` and `train.seed`.
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: None,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        Self::parse(&text).map_err(|e| UsageError(format!("{}: {e:#}", path.display())).into())
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            anyhow::bail!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version);
        }
        Ok(cfg)
    }

    /// Flag, then config file, then `EA_SEED`, then 0. The result is written
    /// back so the resolved config records it.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> anyhow::Result<u64> {
        let env = match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| UsageError(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            ),
            Err(_) => None,
        };
        let seed = flag.or(self.seed).or(env).unwrap_or(0);
        self.seed = Some(seed);
        self.model.seed = seed;
        self.train.seed = seed;
        Ok(seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn write_resolved(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(RESOLVED_NAME);
        std::fs::write(&path, self.to_toml()).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eann::model::Variant;

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.model.variant = Variant::BilstmEa;
        cfg.model.concat_emoji = Some(false);
        cfg.train.clip_norm = Some(5.0);
        cfg.paths.train = Some("a/train.jsonl".into());
        cfg.resolve_seed(Some(9)).unwrap();
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.model.seed, 9);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::parse("version = 1\n[model]\nvariant = \"CNN\"\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.model.variant, Variant::Cnn);
        assert_eq!(cfg.model.embed_dim, 200);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.lr, 1e-5);
    }

    #[test]
    fn rejects_other_versions_and_unknown_keys() {
        assert!(RunConfig::parse("version = 2\n").is_err());
        assert!(RunConfig::parse("version = 1\n[model]\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("version = 1\nbogus = 1\n").is_err());
    }
}
