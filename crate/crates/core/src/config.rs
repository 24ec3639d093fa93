//! Run configuration: one TOML file with a section per module.
//!
//! `RunConfig::default()` carries the full-scale hyper-parameters;
//! `RunConfig::desk_scale()` is the small setting used with the toy corpus.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint;
use crate::discriminators::DmConfig;
use crate::eval::FluencyConfig;
use crate::generator::{GeneratorConfig, LmConfig};
use crate::schedule::{ScheduleConfig, ScheduleError, ScheduleSettings};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    /// Mean of the generator's token embeddings.
    MeanToken,
    /// Model-free hashed word vectors.
    Hashing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub embedder: EmbedderKind,
    pub hashing_width: usize,
    /// Epochs for the publisher classifier used to judge style adherence.
    pub style_classifier_epochs: usize,
    pub fluency: FluencyConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            embedder: EmbedderKind::MeanToken,
            hashing_width: 64,
            style_classifier_epochs: 10,
            fluency: FluencyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream is derived from it. It replaces
    /// `generator.seed` when the config is used.
    pub seed: u64,
    pub schedule: ScheduleSettings,
    pub generator: GeneratorConfig,
    pub model: LmConfig,
    pub dm: DmConfig,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            schedule: ScheduleSettings::default(),
            generator: GeneratorConfig::default(),
            model: LmConfig::default(),
            dm: DmConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

pub const DESK_SCALE_TOML: &str = include_str!("../data/toy.toml");

impl RunConfig {
    /// Small backbone and short schedule for the bundled toy corpus.
    pub fn desk_scale() -> Self {
        Self::from_toml(DESK_SCALE_TOML).expect("bundled desk-scale config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.schedule_config().validate().map_err(|e| match e {
            ScheduleError::ConfigInvalid(m) => ConfigError::Invalid(m),
            other => ConfigError::Invalid(other.to_string()),
        })?;
        if self.metrics.fluency.clusters == 0 {
            return Err(ConfigError::Invalid("metrics.fluency.clusters must be >= 1".into()));
        }
        if self.metrics.hashing_width == 0 {
            return Err(ConfigError::Invalid("metrics.hashing_width must be >= 1".into()));
        }
        Ok(())
    }

    pub fn schedule_config(&self) -> ScheduleConfig {
        ScheduleConfig {
            seed: self.seed,
            schedule: self.schedule.clone(),
            generator: GeneratorConfig {
                seed: self.seed,
                ..self.generator.clone()
            },
            model: self.model.clone(),
            dm: self.dm.clone(),
        }
    }

    /// SHA-256 of the canonical JSON form; embedded in every output file.
    pub fn manifest_hash(&self) -> String {
        checkpoint::sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::DecodeStrategy;

    #[test]
    fn defaults_are_the_full_scale_values() {
        let c = RunConfig::default();
        assert_eq!(c.generator.learning_rate, 5e-5);
        assert_eq!(c.generator.warmup_steps, 1000);
        assert_eq!(c.generator.weight_decay, 0.01);
        assert_eq!(
            (c.generator.train_batch_size, c.generator.generation_batch_size),
            (2, 32)
        );
        assert_eq!(c.generator.max_length, 1024);
        assert_eq!(c.generator.decode, DecodeStrategy::Nucleus);
        assert_eq!((c.dm.learning_rate, c.dm.weight_decay), (1e-3, 1e-4));
        assert_eq!((c.dm.dropout, c.dm.hops), (0.1, 1));
        assert_eq!((c.schedule.epochs_style, c.schedule.epochs_source), (10, 5));
        assert_eq!(c.model.embedding_width, 768);
        c.validate().unwrap();
    }

    #[test]
    fn empty_file_gives_defaults_and_round_trips() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
        let d = RunConfig::desk_scale();
        assert_eq!(RunConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        assert!(matches!(
            RunConfig::from_toml("[schedule]\nepochs_style = 0\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(RunConfig::from_toml("sed = 3\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.manifest_hash(), b.manifest_hash());
        assert_eq!(a.manifest_hash(), RunConfig::default().manifest_hash());
    }
}
