//! Flat greedy decoding of span/type scores.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::EntitySpan;
use crate::numeric::Matrix;
use crate::student::SpanIndexSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicted {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub score: f64,
}

impl Predicted {
    pub fn span(&self) -> EntitySpan {
        EntitySpan::new(self.start, self.end, self.label.clone())
    }

    pub fn overlaps(&self, other: &Predicted) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Selection order: higher score first, then earlier start, shorter width,
/// lexicographically smaller type.
pub fn candidate_order(a: &Predicted, b: &Predicted) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.start.cmp(&b.start))
        .then((a.end - a.start).cmp(&(b.end - b.start)))
        .then(a.label.cmp(&b.label))
}

/// Per valid span, the best type if its score clears `threshold`.
pub fn candidates<S: AsRef<str>>(
    scores: &Matrix,
    spans: &SpanIndexSet,
    type_names: &[S],
    threshold: f64,
) -> Vec<Predicted> {
    let mut out = Vec::new();
    for (i, (&(p, q), &valid)) in spans.spans.iter().zip(&spans.valid_mask).enumerate() {
        if !valid {
            continue;
        }
        let row = scores.row(i);
        let best = (0..type_names.len()).max_by(|&a, &b| {
            row[a]
                .total_cmp(&row[b])
                .then_with(|| type_names[b].as_ref().cmp(type_names[a].as_ref()))
        });
        if let Some(k) = best {
            if row[k] > threshold {
                out.push(Predicted {
                    start: p,
                    end: q,
                    label: type_names[k].as_ref().to_string(),
                    score: row[k],
                });
            }
        }
    }
    out
}

/// Greedily keeps the best remaining candidate that overlaps nothing kept so far.
pub fn select_non_overlapping(mut cands: Vec<Predicted>) -> Vec<Predicted> {
    cands.sort_by(candidate_order);
    let mut kept: Vec<Predicted> = Vec::new();
    for c in cands {
        if !kept.iter().any(|k| k.overlaps(&c)) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|p| (p.start, p.end));
    kept
}

pub fn decode<S: AsRef<str>>(
    scores: &Matrix,
    spans: &SpanIndexSet,
    type_names: &[S],
    threshold: f64,
) -> Vec<Predicted> {
    select_non_overlapping(candidates(scores, spans, type_names, threshold))
}
