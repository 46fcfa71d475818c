//! Span/node pairing, the distillation loss and the combined objective.

use rand::Rng;

use crate::data::DatasetEntry;
use crate::distill::LossWeights;
use crate::error::Result;
use crate::numeric::{Graph, Matrix, Var};
use crate::student::{language_loss, language_targets, Forward, SpanIndexSet, StudentModel};
use crate::teacher::TeacherEmbedding;

/// Matched `(raw span position, teacher row)` pairs of one sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistillBatch {
    pub pairs: Vec<(usize, usize)>,
    /// Annotations that could not be paired.
    pub dropped: usize,
}

pub fn build_distill_batch(
    entry: &DatasetEntry,
    spans: &SpanIndexSet,
    teacher: &TeacherEmbedding,
) -> DistillBatch {
    let mut batch = DistillBatch::default();
    for k in &entry.kge {
        let Some(node) = teacher.id_index().get(&k.node_id).copied() else {
            log::warn!("kge node {:?} is not in the teacher; pair dropped", k.node_id);
            batch.dropped += 1;
            continue;
        };
        let Some(pos) = spans.position(k.start, k.end) else {
            log::warn!(
                "kge span ({}, {}) is not a valid span at width {}; pair dropped",
                k.start,
                k.end,
                spans.w
            );
            batch.dropped += 1;
            continue;
        };
        batch.pairs.push((pos, node));
    }
    batch
}

/// `MSE(MLP_span(S_sub), MLP_dist(H_sub))`; `h_sub` should be a constant so the
/// teacher receives no gradient. Zero pairs give a constant 0.
pub fn distill_loss(g: &mut Graph, model: &StudentModel, s_sub: Var, h_sub: Var) -> Result<Var> {
    if g.shape(s_sub).0 == 0 {
        return Ok(g.constant(Matrix::scalar(0.0)));
    }
    let store = model.store();
    let a = model.ids().head_span.apply(g, store, s_sub)?;
    let b = model.ids().head_teacher.apply(g, store, h_sub)?;
    g.mse(a, b)
}

/// Graph nodes and bookkeeping of one step's objective.
#[derive(Debug, Clone)]
pub struct StepLoss {
    pub forward: Forward,
    pub lang: Var,
    pub dist: Var,
    pub total: Var,
    /// Matched span/node pairs across the batch.
    pub pairs: usize,
    pub dropped: usize,
    /// Masked-in `(span, type)` pairs across the batch.
    pub masked: usize,
    /// Stacked matched span representations, `pairs × d`.
    pub s_sub: Var,
    /// The constant teacher rows paired with `s_sub`.
    pub h_sub: Var,
}

/// Builds the full objective: per-pair mean BCE over the batch, concatenated-batch
/// distillation MSE, weighted sum.
#[allow(clippy::too_many_arguments)]
pub fn step_loss<R: Rng + ?Sized>(
    g: &mut Graph,
    model: &StudentModel,
    batch: &[&DatasetEntry],
    types: &[String],
    teacher: &TeacherEmbedding,
    weights: LossWeights,
    training: bool,
    rng: &mut R,
) -> Result<StepLoss> {
    let sentences: Vec<&[String]> = batch.iter().map(|e| e.tokenized_text.as_slice()).collect();
    let forward = model.forward(g, &sentences, types, training, rng)?;
    let (labels, mask) = language_targets(batch, &forward, types)?;
    let masked = mask.values().iter().filter(|&&m| m != 0.0).count();
    let bce = language_loss(g, &forward, &labels, &mask)?;
    let lang = g.scale(bce, 1.0 / masked.max(1) as f64);

    let mut rows = Vec::new();
    let mut nodes = Vec::new();
    let mut dropped = 0;
    for ((entry, spans), &off) in batch.iter().zip(&forward.spans).zip(&forward.offsets) {
        let db = build_distill_batch(entry, spans, teacher);
        dropped += db.dropped;
        for (pos, node) in db.pairs {
            rows.push(off + pos);
            nodes.push(node);
        }
    }
    let pairs = rows.len();
    let s_sub = g.gather_rows(forward.span_reps, rows)?;
    let h_sub = g.constant(teacher.rows_for(&nodes)?);
    let dist = distill_loss(g, model, s_sub, h_sub)?;

    let wl = g.scale(lang, weights.a_bce);
    let wd = g.scale(dist, weights.b_dist);
    let total = g.add(wl, wd)?;
    Ok(StepLoss {
        forward,
        lang,
        dist,
        total,
        pairs,
        dropped,
        masked,
        s_sub,
        h_sub,
    })
}
