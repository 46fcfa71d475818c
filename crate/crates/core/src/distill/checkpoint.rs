//! Student checkpoints: configuration echo, vocabulary and every parameter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::{read_container, write_container};
use crate::data::Vocab;
use crate::distill::TrainConfig;
use crate::error::{Error, Result};
use crate::numeric::{Matrix, ParamStore};
use crate::student::{StudentConfig, StudentModel};

const KIND: &str = "student-checkpoint";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    student: StudentConfig,
    train: Option<TrainConfig>,
    vocab: Vocab,
    vocab_sha256: String,
    types: Vec<String>,
    step: usize,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: StudentModel,
    pub train: Option<TrainConfig>,
    /// Entity types the model was trained on.
    pub types: Vec<String>,
    /// Optimizer steps taken before the save.
    pub step: usize,
}

pub fn save_checkpoint(
    path: &Path,
    model: &StudentModel,
    train: Option<&TrainConfig>,
    types: &[String],
    step: usize,
) -> Result<()> {
    let meta = Meta {
        student: *model.config(),
        train: train.cloned(),
        vocab: model.vocab().clone(),
        vocab_sha256: model.vocab().fingerprint(),
        types: types.to_vec(),
        step,
    };
    let store = model.store();
    let tensors: Vec<(&str, &Matrix)> = store.iter().map(|p| (p.name.as_str(), &p.value)).collect();
    write_container(path, KIND, &meta, &tensors)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (meta, tensors): (Meta, _) = read_container(path, KIND)?;
    let found = meta.vocab.fingerprint();
    if found != meta.vocab_sha256 {
        return Err(Error::Integrity(format!(
            "{}: vocabulary hash {found} does not match recorded {}",
            path.display(),
            meta.vocab_sha256
        )));
    }
    let mut store = ParamStore::new();
    for (name, value) in tensors {
        store.insert(name, value)?;
    }
    let model = StudentModel::from_parts(meta.vocab, meta.student, store)?;
    Ok(Checkpoint {
        model,
        train: meta.train,
        types: meta.types,
        step: meta.step,
    })
}

impl Checkpoint {
    /// Hard error on dimension changes, warnings on other drift from the run config.
    pub fn check_against(&self, cfg: &TrainConfig) -> Result<()> {
        let s = self.model.config();
        let dims = [
            ("hidden_size", s.hidden_size, cfg.hidden_size),
            ("max_span_width", s.max_span_width, cfg.max_span_width),
            ("distill_width", s.distill_width, cfg.distill_width),
        ];
        for (name, have, want) in dims {
            if have != want {
                return Err(Error::Mismatch(format!(
                    "checkpoint {name} is {have} but the run config has {want}"
                )));
            }
        }
        if let Some(saved) = &self.train {
            if saved != cfg {
                log::warn!("checkpoint was trained with a different configuration: {saved:?}");
            }
        }
        Ok(())
    }

    /// Errors unless the vocabulary fingerprint matches `expected`.
    pub fn check_vocab(&self, expected: &str) -> Result<()> {
        let found = self.model.vocab().fingerprint();
        if found != expected {
            return Err(Error::Mismatch(format!(
                "checkpoint vocabulary {found} does not match expected {expected}"
            )));
        }
        Ok(())
    }
}
