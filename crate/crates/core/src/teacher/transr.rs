//! TransR relational embeddings.
//!
//! Entities live in one space and each relation `r` owns a projection `M_r`
//! and a translation `r_vec`. The energy of a triple is
//! `‖M_r·h + r_vec − M_r·t‖²`; lower is more plausible. Training minimises the
//! margin ranking loss against filtered head-or-tail corruptions, and entity
//! vectors are renormalised to unit length after every epoch.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{uniform, AdamConfig, Graph, Matrix, ParamId, ParamStore, Var};
use crate::teacher::{KnowledgeGraph, Triple};

#[derive(Debug, Clone, PartialEq)]
pub struct TransRParams {
    /// M × d″
    pub entities: Matrix,
    /// R × d″
    pub relations: Matrix,
    /// One d″ × d″ projection per relation.
    pub projections: Vec<Matrix>,
}

impl TransRParams {
    pub fn dim(&self) -> usize {
        self.entities.cols()
    }
}

/// `‖M_r·h + r_vec − M_r·t‖²`.
pub fn transr_score(head: usize, relation: usize, tail: usize, params: &TransRParams) -> f64 {
    let m = &params.projections[relation];
    let h = params.entities.row(head);
    let t = params.entities.row(tail);
    let r = params.relations.row(relation);
    (0..m.rows())
        .map(|i| {
            let proj: f64 = m.row(i).iter().zip(h.iter().zip(t)).map(|(a, (x, y))| a * (x - y)).sum();
            let v = proj + r[i];
            v * v
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransRConfig {
    pub dim: usize,
    pub margin: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub learning_rate: f64,
    /// Positives per update; 0 means one full-batch update per epoch.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TransRConfig {
    fn default() -> Self {
        Self {
            dim: 58,
            margin: 1.0,
            epochs: 200,
            negatives_per_positive: 2,
            learning_rate: 0.01,
            batch_size: 0,
            seed: 0,
        }
    }
}

/// Parameter handles of a TransR model living in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct TransRIds {
    pub entities: ParamId,
    pub relations: ParamId,
    pub projections: Vec<ParamId>,
}

impl TransRIds {
    /// Unit-norm random entities, small random translations, identity projections.
    pub fn init(
        store: &mut ParamStore,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mut entities = uniform(num_entities, dim, 1.0, rng);
        normalize_rows(&mut entities);
        let relations = uniform(num_relations, dim, 6.0 / (dim as f64).sqrt() * 0.1, rng);
        let entities = store.insert("transr.entities", entities)?;
        let relations = store.insert("transr.relations", relations)?;
        let projections = (0..num_relations)
            .map(|r| store.insert(format!("transr.proj{r}"), Matrix::identity(dim)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entities,
            relations,
            projections,
        })
    }

    pub fn snapshot(&self, store: &ParamStore) -> TransRParams {
        TransRParams {
            entities: store.value(self.entities).clone(),
            relations: store.value(self.relations).clone(),
            projections: self.projections.iter().map(|&id| store.value(id).clone()).collect(),
        }
    }

    /// Energies of `triples` as an n×1 column, grouped per relation internally.
    fn scores(&self, g: &mut Graph, store: &ParamStore, ent: Var, rel: Var, triples: &[Triple]) -> Result<Vec<(Vec<usize>, Var)>> {
        let mut out = Vec::new();
        for (r, &proj_id) in self.projections.iter().enumerate() {
            let idx: Vec<usize> = (0..triples.len()).filter(|&i| triples[i].relation == r).collect();
            if idx.is_empty() {
                continue;
            }
            let heads = g.gather_rows(ent, idx.iter().map(|&i| triples[i].head).collect())?;
            let tails = g.gather_rows(ent, idx.iter().map(|&i| triples[i].tail).collect())?;
            let diff = g.sub(heads, tails)?;
            let proj = g.param(store, proj_id);
            let projected = g.matmul_nt(diff, proj)?;
            let r_vec = g.gather_rows(rel, vec![r])?;
            let shifted = g.add_row(projected, r_vec)?;
            out.push((idx, g.row_sq_norm(shifted)));
        }
        Ok(out)
    }

    /// Mean of `max(0, margin + E(pos_i) − E(neg_i))` over paired triples.
    /// Pairs must share a relation.
    pub fn margin_loss(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        positives: &[Triple],
        negatives: &[Triple],
        margin: f64,
    ) -> Result<Var> {
        if positives.len() != negatives.len() {
            return Err(Error::Shape(format!(
                "{} positives paired with {} negatives",
                positives.len(),
                negatives.len()
            )));
        }
        if let Some(i) = (0..positives.len()).find(|&i| positives[i].relation != negatives[i].relation) {
            return Err(Error::Config(format!("pair {i} mixes relations")));
        }
        let ent = g.param(store, self.entities);
        let rel = g.param(store, self.relations);
        // same relation grouping order for both sides, so groups align row for row
        let pos = self.scores(g, store, ent, rel, positives)?;
        let neg = self.scores(g, store, ent, rel, negatives)?;
        let mut total: Option<Var> = None;
        for ((_, p), (_, n)) in pos.into_iter().zip(neg) {
            let d = g.sub(p, n)?;
            let shifted = g.add_scalar(d, margin);
            let hinge = g.relu(shifted);
            let s = g.sum(hinge);
            total = Some(match total {
                Some(t) => g.add(t, s)?,
                None => s,
            });
        }
        let total = match total {
            Some(t) => t,
            None => g.constant(Matrix::scalar(0.0)),
        };
        Ok(g.scale(total, 1.0 / positives.len().max(1) as f64))
    }
}

pub fn normalize_rows(m: &mut Matrix) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
}

/// Every head or tail corruption of `t` that is not a known triple.
pub fn corruptions(t: Triple, num_entities: usize, known: &HashSet<Triple>) -> Vec<Triple> {
    let heads = (0..num_entities).map(|e| Triple::new(e, t.relation, t.tail));
    let tails = (0..num_entities).map(|e| Triple::new(t.head, t.relation, e));
    heads.chain(tails).filter(|c| !known.contains(c)).collect()
}

/// Up to `k` distinct corruptions drawn uniformly without replacement.
pub fn sample_corruptions<R: Rng + ?Sized>(
    t: Triple,
    k: usize,
    num_entities: usize,
    known: &HashSet<Triple>,
    rng: &mut R,
) -> Vec<Triple> {
    let all = corruptions(t, num_entities, known);
    if k >= all.len() {
        return all;
    }
    rand::seq::index::sample(rng, all.len(), k).into_iter().map(|i| all[i]).collect()
}

#[derive(Debug, Clone)]
pub struct TransRTraining {
    pub params: TransRParams,
    /// Mean hinge loss per epoch, measured before that epoch's updates.
    pub epoch_losses: Vec<f64>,
}

pub fn train_transr(kg: &KnowledgeGraph, cfg: &TransRConfig) -> Result<TransRTraining> {
    train_transr_triples(kg.node_count(), kg.relations().len(), kg.edges(), cfg)
}

pub fn train_transr_triples(
    num_entities: usize,
    num_relations: usize,
    triples: &[Triple],
    cfg: &TransRConfig,
) -> Result<TransRTraining> {
    if num_entities < 2 {
        return Err(Error::Config(
            "TransR needs at least two entities to form negatives".into(),
        ));
    }
    if triples.is_empty() {
        return Err(Error::Config("TransR needs at least one edge".into()));
    }
    if cfg.dim == 0 {
        return Err(Error::Config("TransR dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = ParamStore::new();
    let ids = TransRIds::init(&mut store, num_entities, num_relations, cfg.dim, &mut rng)?;
    let known: HashSet<Triple> = triples.iter().copied().collect();
    let batch = if cfg.batch_size == 0 { triples.len() } else { cfg.batch_size };

    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for &i in chunk {
                let k = cfg.negatives_per_positive.max(1);
                for c in sample_corruptions(triples[i], k, num_entities, &known, &mut rng) {
                    pos.push(triples[i]);
                    neg.push(c);
                }
            }
            if pos.is_empty() {
                continue;
            }
            store.zero_grad();
            let mut g = Graph::new();
            let loss = ids.margin_loss(&mut g, &store, &pos, &neg, cfg.margin)?;
            let v = g.scalar(loss)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("TransR loss {v}")));
            }
            sum += v;
            batches += 1;
            g.backward(loss, &mut store)?;
            store.adam_step(cfg.learning_rate, AdamConfig::default());
        }
        epoch_losses.push(if batches > 0 { sum / batches as f64 } else { 0.0 });
        normalize_rows(store.value_mut(ids.entities));
    }
    Ok(TransRTraining {
        params: ids.snapshot(&store),
        epoch_losses,
    })
}

/// Filtered tail-prediction rank of `query` among all entities (1 = best).
/// Ties count against the query.
pub fn filtered_tail_rank(query: Triple, params: &TransRParams, known: &HashSet<Triple>) -> usize {
    let target = transr_score(query.head, query.relation, query.tail, params);
    let better = (0..params.entities.rows())
        .filter(|&e| e != query.tail)
        .filter(|&e| !known.contains(&Triple::new(query.head, query.relation, e)))
        .filter(|&e| transr_score(query.head, query.relation, e, params) <= target)
        .count();
    better + 1
}

pub fn filtered_hits_at(k: usize, queries: &[Triple], params: &TransRParams, known: &HashSet<Triple>) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let hits = queries
        .iter()
        .filter(|&&q| filtered_tail_rank(q, params, known) <= k)
        .count();
    hits as f64 / queries.len() as f64
}
