use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How windows within one day contribute to updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPolicy {
    /// One update per 96-window day, using the day's mean gradient.
    #[default]
    Day,
    /// One update per window, in order.
    Window,
}

fn default_epochs() -> usize {
    10_000
}

fn default_batch_lr() -> f64 {
    1e-3
}

fn default_online_lr() -> f64 {
    1e-4
}

fn default_normalizer_source() -> String {
    "year1".into()
}

fn default_updates() -> usize {
    1
}

/// Chronological batch training settings. Windows are never shuffled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_lr")]
    pub learning_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub batch_policy: BatchPolicy,
    /// Named calendar range the normalizer is fitted on.
    #[serde(default = "default_normalizer_source")]
    pub normalizer_source: String,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            learning_rate: default_batch_lr(),
            seed: 0,
            batch_policy: BatchPolicy::Day,
            normalizer_source: default_normalizer_source(),
        }
    }
}

impl TrainingConfig {
    /// Retraining a transferred model on a month of target data: 2000 epochs.
    pub fn retrain_default() -> Self {
        Self {
            epochs: 2_000,
            normalizer_source: "january_year2".into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Prequential update settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    #[serde(default = "default_online_lr")]
    pub learning_rate: f64,
    /// Gradient updates per observed sample; 1 in normal operation.
    #[serde(default = "default_updates")]
    pub updates_per_sample: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_online_lr(),
            updates_per_sample: 1,
        }
    }
}

impl OnlineConfig {
    pub fn frozen() -> Self {
        Self {
            learning_rate: 0.0,
            updates_per_sample: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "online learning_rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}
