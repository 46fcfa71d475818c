//! Decoding, micro-F1 and checkpoint evaluation.

mod decode;
mod metrics;

pub use decode::{candidate_order, candidates, decode, select_non_overlapping, Predicted};
pub use metrics::{micro_f1, Counts, MetricsReport};

use serde::Serialize;

use crate::data::{DatasetEntry, EntitySpan};
use crate::error::Result;
use crate::student::{dedup_types, StudentModel};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub metrics: MetricsReport,
    pub predictions: Vec<Vec<Predicted>>,
    /// Entries left out, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Eval-mode scoring, greedy decoding and micro-F1 over `entries`.
///
/// Entries that fail validation are skipped and reported rather than failing the run.
pub fn evaluate<S: AsRef<str>>(
    model: &StudentModel,
    entries: &[DatasetEntry],
    type_names: &[S],
    threshold: f64,
) -> Result<Evaluation> {
    let types = dedup_types(type_names);
    let mut predictions = Vec::with_capacity(entries.len());
    let mut gold: Vec<Vec<EntitySpan>> = Vec::with_capacity(entries.len());
    let mut skipped = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        if let Err(msg) = e.validate() {
            skipped.push((i, msg));
            continue;
        }
        if e.tokenized_text.is_empty() {
            skipped.push((i, "empty sentence".into()));
            continue;
        }
        let (spans, scores) = model.score_sentence(&e.tokenized_text, &types)?;
        predictions.push(decode(&scores, &spans, &types, threshold));
        gold.push(e.ner.clone());
    }
    if !skipped.is_empty() {
        log::warn!("{} entries skipped during evaluation", skipped.len());
    }
    let pred_spans: Vec<Vec<EntitySpan>> = predictions
        .iter()
        .map(|p| p.iter().map(Predicted::span).collect())
        .collect();
    let metrics = micro_f1(&pred_spans, &gold)?;
    Ok(Evaluation {
        metrics,
        predictions,
        skipped,
    })
}
