//! Seeded training loop with warmup/cosine Adam and checkpoints.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{collect_labels, tokenize_text, write_dataset, DatasetEntry, Vocab};
use crate::distill::{save_checkpoint, step_loss, TrainConfig};
use crate::error::{Error, Result};
use crate::numeric::{lr_at, AdamConfig, Graph};
use crate::student::{StudentConfig, StudentModel};
use crate::teacher::TeacherEmbedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    pub lr: f64,
    pub lang: f64,
    pub dist: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub rows: Vec<StepRow>,
    pub checkpoint: Option<PathBuf>,
    pub wall_clock_secs: f64,
    pub types: Vec<String>,
    /// Distillation pairs dropped over the run.
    pub dropped_pairs: usize,
}

impl TrainReport {
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "step\tlr\tlang\tdist\ttotal")?;
        for r in &self.rows {
            writeln!(w, "{}\t{}\t{}\t{}\t{}", r.step, r.lr, r.lang, r.dist, r.total)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Compact JSON summary without the per-step rows.
    pub fn summary(&self) -> serde_json::Value {
        let first = self.rows.first();
        let last = self.rows.last();
        serde_json::json!({
            "steps": self.rows.len(),
            "initial_lang": first.map(|r| r.lang),
            "final_lang": last.map(|r| r.lang),
            "initial_dist": first.map(|r| r.dist),
            "final_dist": last.map(|r| r.dist),
            "final_total": last.map(|r| r.total),
            "checkpoint": self.checkpoint,
            "wall_clock_secs": self.wall_clock_secs,
            "types": self.types,
            "dropped_pairs": self.dropped_pairs,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: StudentModel,
    pub report: TrainReport,
}

/// Vocabulary over training tokens and type-name tokens.
pub fn build_vocab(entries: &[DatasetEntry], types: &[String]) -> Vocab {
    Vocab::from_tokens(
        entries
            .iter()
            .flat_map(|e| e.tokenized_text.iter().cloned())
            .chain(types.iter().flat_map(|t| tokenize_text(t))),
    )
}

pub fn init_student(entries: &[DatasetEntry], types: &[String], teacher: &TeacherEmbedding, cfg: &TrainConfig) -> Result<StudentModel> {
    let student = StudentConfig {
        hidden_size: cfg.hidden_size,
        max_span_width: cfg.max_span_width,
        dropout: cfg.dropout,
        teacher_width: teacher.width(),
        distill_width: cfg.distill_width,
        seed: cfg.seed,
    };
    StudentModel::new(build_vocab(entries, types), student)
}

/// Trains a fresh student on `entries` (types taken from their gold labels).
pub fn train(
    entries: &[DatasetEntry],
    teacher: &TeacherEmbedding,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let types = collect_labels(entries);
    let model = init_student(entries, &types, teacher, cfg)?;
    train_model(model, entries, &types, teacher, cfg, out_dir)
}

/// Endless sequence of per-epoch seeded permutations.
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut s = Self {
            order: (0..n).collect(),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    fn next(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size.min(self.order.len()) {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

pub fn train_model(
    mut model: StudentModel,
    entries: &[DatasetEntry],
    types: &[String],
    teacher: &TeacherEmbedding,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if teacher.text_dim() != cfg.kg_hidden {
        return Err(Error::Mismatch(format!(
            "teacher was built with kg_hidden {} but the run config has {}",
            teacher.text_dim(),
            cfg.kg_hidden
        )));
    }
    if entries.is_empty() || types.is_empty() {
        return Err(Error::EmptyInput("no training entries or entity types".into()));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let started = Instant::now();
    let weights = cfg.weights();
    let schedule = (cfg.steps > 0).then(|| cfg.schedule_config()).transpose()?;
    let mut sampler = BatchSampler::new(entries.len(), cfg.data_seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.dropout_seed);
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut dropped_pairs = 0;
    let mut last_checkpoint = None;
    let save = |model: &StudentModel, name: &str, step: usize| -> Result<Option<PathBuf>> {
        match out_dir {
            Some(dir) => {
                let path = dir.join(name);
                save_checkpoint(&path, model, Some(cfg), types, step)?;
                Ok(Some(path))
            }
            None => Ok(None),
        }
    };

    for step in 0..cfg.steps {
        let picked = sampler.next(cfg.batch);
        let batch: Vec<&DatasetEntry> = picked.iter().map(|&i| &entries[i]).collect();
        model.store_mut().zero_grad();
        let mut g = Graph::new();
        let loss = step_loss(&mut g, &model, &batch, types, teacher, weights, true, &mut dropout_rng)?;
        let (lang, dist, total) = (g.scalar(loss.lang)?, g.scalar(loss.dist)?, g.scalar(loss.total)?);
        if !(lang.is_finite() && dist.is_finite() && total.is_finite()) {
            let message = format!("non-finite loss (lang {lang}, dist {dist}, total {total})");
            if let Some(dir) = out_dir {
                let owned: Vec<DatasetEntry> = batch.iter().map(|&e| e.clone()).collect();
                write_dataset(&owned, &dir.join("aborted_batch.jsonl"))?;
                save(&model, "last_good.ckpt", step)?;
            }
            log::error!("step {step}: {message}");
            return Err(Error::TrainingAborted { step, message });
        }
        dropped_pairs += loss.dropped;
        g.backward(loss.total, model.store_mut())?;
        let lr = lr_at(step, schedule.as_ref().expect("steps > 0"));
        model.store_mut().adam_step(lr, AdamConfig::default());
        rows.push(StepRow {
            step,
            lr,
            lang,
            dist,
            total,
        });
        if step % 100 == 0 {
            log::debug!("step {step}: lr {lr:.2e} lang {lang:.4} dist {dist:.4}");
        }
        if cfg.checkpoint_interval > 0 && (step + 1) % cfg.checkpoint_interval == 0 && step + 1 < cfg.steps {
            save(&model, &format!("step-{}.ckpt", step + 1), step + 1)?;
        }
    }
    if let Some(path) = save(&model, "final.ckpt", cfg.steps)? {
        last_checkpoint = Some(path);
    }
    let report = TrainReport {
        rows,
        checkpoint: last_checkpoint,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        types: types.to_vec(),
        dropped_pairs,
    };
    Ok(TrainOutcome { model, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_covers_each_epoch() {
        let mut s = BatchSampler::new(5, 3);
        let mut seen: Vec<usize> = (0..2).flat_map(|_| s.next(5)).collect();
        assert_eq!(seen.len(), 10);
        let second = seen.split_off(5);
        let sorted = |mut v: Vec<usize>| {
            v.sort();
            v
        };
        assert_eq!(sorted(seen), [0, 1, 2, 3, 4]);
        assert_eq!(sorted(second), [0, 1, 2, 3, 4]);
        assert_eq!(BatchSampler::new(3, 0).next(8).len(), 3);
    }
}
