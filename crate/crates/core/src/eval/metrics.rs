//! Entity-level precision, recall and F1 on exact `(start, end, type)` matches.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::EntitySpan;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Counts {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub micro: Counts,
    pub macro_f1: f64,
    pub per_type: BTreeMap<String, Counts>,
}

/// Micro-averaged over the corpus; each sentence's spans are compared as sets.
pub fn micro_f1(predictions: &[Vec<EntitySpan>], gold: &[Vec<EntitySpan>]) -> Result<MetricsReport> {
    if predictions.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} predicted sentences for {} gold sentences",
            predictions.len(),
            gold.len()
        )));
    }
    let mut per: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (p, g) in predictions.iter().zip(gold) {
        let p: BTreeSet<&EntitySpan> = p.iter().collect();
        let g: BTreeSet<&EntitySpan> = g.iter().collect();
        for s in &p {
            let c = per.entry(s.label.clone()).or_default();
            if g.contains(s) {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
        for s in g.difference(&p) {
            per.entry(s.label.clone()).or_default().2 += 1;
        }
    }
    let (tp, fp, fn_) = per
        .values()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    let per_type: BTreeMap<String, Counts> = per
        .into_iter()
        .map(|(k, (tp, fp, fn_))| (k, Counts::from_counts(tp, fp, fn_)))
        .collect();
    let macro_f1 = if per_type.is_empty() {
        0.0
    } else {
        per_type.values().map(|c| c.f1).sum::<f64>() / per_type.len() as f64
    };
    Ok(MetricsReport {
        micro: Counts::from_counts(tp, fp, fn_),
        macro_f1,
        per_type,
    })
}
