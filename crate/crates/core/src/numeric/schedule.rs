//! Linear warmup followed by cosine decay.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub base_rate: f64,
    pub total_steps: usize,
    pub warmup_ratio: f64,
}

impl ScheduleConfig {
    pub fn new(base_rate: f64, total_steps: usize, warmup_ratio: f64) -> Result<Self> {
        let cfg = Self {
            base_rate,
            total_steps,
            warmup_ratio,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0 && self.base_rate.is_finite()) {
            return Err(Error::Config(format!(
                "base learning rate must be positive, got {}",
                self.base_rate
            )));
        }
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return Err(Error::Config(format!(
                "warmup ratio {} outside [0, 1)",
                self.warmup_ratio
            )));
        }
        if self.total_steps > 0 && self.warmup_steps() >= self.total_steps {
            return Err(Error::Config("warmup consumes every step".into()));
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> usize {
        (self.warmup_ratio * self.total_steps as f64).floor() as usize
    }
}

/// Learning rate at `step` (clamped to `total_steps`).
pub fn lr_at(step: usize, cfg: &ScheduleConfig) -> f64 {
    let total = cfg.total_steps;
    if total == 0 {
        return 0.0;
    }
    let step = step.min(total);
    let warmup = cfg.warmup_steps();
    if step < warmup {
        return cfg.base_rate * step as f64 / warmup as f64;
    }
    let progress = (step - warmup) as f64 / (total - warmup) as f64;
    (cfg.base_rate * 0.5 * (1.0 + (PI * progress).cos())).max(0.0)
}
