use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::data::DatasetConfig;
use crate::mp::config::{ModeKind, ModelConfig};

/// Everything a training run, study or sweep needs. Unknown JSON keys are
/// rejected; missing ones take the defaults below. An omitted `model` is
/// [`ModelConfig::toy`], but fields missing inside a given `model` object
/// fall back to the full-size [`ModelConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Generated when `dataset_path` is unset.
    pub dataset: DatasetConfig,
    pub dataset_path: Option<PathBuf>,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub warmup_epochs: usize,
    pub grad_clip: f64,
    pub augmentation: bool,
    pub train_fraction: f64,
    /// Seeds for studies and sweeps.
    pub seeds: Vec<u64>,
    pub modes: Vec<ModeKind>,
    pub fractions: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::toy(),
            dataset: DatasetConfig::default(),
            dataset_path: None,
            seed: 0,
            epochs: 30,
            batch_size: 32,
            lr: 5e-4,
            weight_decay: 5e-3,
            warmup_epochs: 5,
            grad_clip: 0.5,
            augmentation: false,
            train_fraction: 1.0,
            seeds: vec![0, 1, 2],
            modes: ModeKind::ALL.to_vec(),
            fractions: vec![0.1, 0.3, 1.0],
        }
    }
}

impl ExperimentConfig {
    /// Vector target on 2000 molecules with a 1.5 cutoff, so most of the
    /// centroid information has to travel over more than one hop.
    pub fn vector_preset() -> Self {
        let mut cfg = Self {
            dataset: DatasetConfig {
                n_molecules: 2000,
                ..DatasetConfig::default()
            },
            epochs: 15,
            lr: 2e-3,
            ..Self::default()
        };
        cfg.model.cutoff = 1.5;
        cfg.model.target = crate::mp::config::TargetKind::Vector;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| match e {
            Error::Config { path, message } => Error::Config {
                path: format!("model.{path}"),
                message,
            },
            other => other,
        })?;
        if self.dataset_path.is_none() {
            self.dataset.validate()?;
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1]"));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::config("lr", "learning rate must be positive and weight decay non-negative"));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::config("grad_clip", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.modes.is_empty() {
            return Err(Error::config("modes", "must not be empty"));
        }
        if self.fractions.is_empty()
            || self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0))
            || self.fractions.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::config("fractions", "must be ascending values in (0, 1]"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("experiment", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `dataset_path` is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let Some(p) = &cfg.dataset_path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.dataset_path = Some(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn shipped_configs_match_the_preset() {
        let cfg = ExperimentConfig::from_json(include_str!("../../configs/vector_study.json")).unwrap();
        assert_eq!(cfg, ExperimentConfig::vector_preset());
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::from_json(r#"{"train_fraction": 0.0}"#).unwrap_err();
        assert!(err.to_string().contains("train_fraction"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"model": {"num_heads": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("model.attention_dim"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"fractions": [0.5, 0.1]}"#).unwrap_err();
        assert!(err.to_string().contains("fractions"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"epoch": 3}"#).is_err());
    }
}
