//! Run configuration: a flat JSON object whose missing fields take defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ScheduleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_span_width: usize,
    pub hidden_size: usize,
    pub kg_hidden: usize,
    pub dropout: f64,
    pub steps: usize,
    pub batch: usize,
    pub warmup_ratio: f64,
    pub schedule: Schedule,
    pub learning_rate: f64,
    pub a_bce: f64,
    pub b_dist: f64,
    /// Carried for configuration compatibility; it weights no term.
    pub a_cls: f64,
    pub distill_width: usize,
    /// Parameter initialisation.
    pub seed: u64,
    /// Batch order.
    pub data_seed: u64,
    /// Dropout masks.
    pub dropout_seed: u64,
    /// Write a checkpoint every this many steps; 0 writes only the final one.
    pub checkpoint_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_span_width: 8,
            hidden_size: 64,
            kg_hidden: 58,
            dropout: 0.4,
            steps: 2000,
            batch: 8,
            warmup_ratio: 0.1,
            schedule: Schedule::Cosine,
            learning_rate: 2e-3,
            a_bce: 0.8,
            b_dist: 0.2,
            a_cls: -1.0,
            distill_width: 58,
            seed: 0,
            data_seed: 1,
            dropout_seed: 2,
            checkpoint_interval: 0,
        }
    }
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Unweighted sum of the two losses.
    pub fn unit_weights(mut self) -> Self {
        self.a_bce = 1.0;
        self.b_dist = 1.0;
        self
    }

    /// One seed drives initialisation, batch order and dropout.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.data_seed = seed.wrapping_add(1);
        self.dropout_seed = seed.wrapping_add(2);
        self
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            a_bce: self.a_bce,
            b_dist: self.b_dist,
        }
    }

    pub fn schedule_config(&self) -> Result<ScheduleConfig> {
        ScheduleConfig::new(self.learning_rate, self.steps, self.warmup_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_span_width == 0 || self.batch == 0 {
            return Err(Error::Config("max_span_width and batch must be at least 1".into()));
        }
        if self.hidden_size == 0 || self.kg_hidden == 0 || self.distill_width == 0 {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        if !(self.a_bce >= 0.0 && self.b_dist >= 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative, got a_bce={} b_dist={}",
                self.a_bce, self.b_dist
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.steps > 0 {
            self.schedule_config()?;
        } else if !(0.0..1.0).contains(&self.warmup_ratio) {
            return Err(Error::Config(format!("warmup ratio {} outside [0, 1)", self.warmup_ratio)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub a_bce: f64,
    pub b_dist: f64,
}

/// `a_bce · ℒ_lang + b_dist · ℒ_dist`
pub fn total_loss(lang: f64, dist: f64, weights: LossWeights) -> f64 {
    weights.a_bce * lang + weights.b_dist * dist
}
