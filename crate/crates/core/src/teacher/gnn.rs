//! Mean-aggregation message passing and its node-classification pretraining.
//!
//! One layer maps `H ↦ ReLU(A · H · W)` where `A` averages each node's
//! undirected neighbourhood including itself and `W` is `d′ × d′`. The
//! pretraining head (linear + softmax) is discarded afterwards; the last hidden
//! layer is the propagated feature matrix.

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{glorot, AdamConfig, Graph, Matrix, ParamId, ParamStore, SparseRows, Var};
use crate::teacher::NodeFeatures;

/// Row-normalised adjacency over `N(v) ∪ {v}`, edges read as undirected.
pub fn neighborhood_mean(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<SparseRows> {
    let mut nbrs: Vec<Vec<usize>> = (0..num_nodes).map(|v| vec![v]).collect();
    for &(a, b) in pairs {
        if a >= num_nodes || b >= num_nodes {
            return Err(Error::Shape(format!(
                "edge ({a}, {b}) outside {num_nodes} nodes"
            )));
        }
        if a != b {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
    }
    for n in &mut nbrs {
        n.sort_unstable();
        n.dedup();
    }
    SparseRows::mean_pool(num_nodes, &nbrs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnParams {
    pub layers: Vec<Matrix>,
}

/// Forward propagation with frozen weights; zero layers return `z` unchanged.
pub fn propagate(z: &Matrix, adjacency: &SparseRows, params: &GnnParams) -> Result<Matrix> {
    let mut h = z.clone();
    for w in &params.layers {
        h = adjacency.apply(&h)?.matmul(w)?.map(|v| v.max(0.0));
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub layers: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub val_fraction: f64,
    pub split_seed: u64,
    pub init_seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            epochs: 200,
            learning_rate: 0.01,
            val_fraction: 0.3,
            split_seed: 0,
            init_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnReport {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub train_nodes: usize,
    pub val_nodes: usize,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PretrainedGnn {
    pub params: GnnParams,
    pub head_weight: Matrix,
    pub head_bias: Matrix,
    pub report: GnnReport,
}

/// Parameter handles of a classifier living in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct GnnIds {
    pub layers: Vec<ParamId>,
    pub head_weight: ParamId,
    pub head_bias: ParamId,
}

impl GnnIds {
    pub fn init(
        store: &mut ParamStore,
        dim: usize,
        layers: usize,
        num_labels: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let layers = (0..layers)
            .map(|k| store.insert(format!("gnn.layer{k}"), glorot(dim, dim, rng)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            head_weight: store.insert("gnn.head.w", glorot(dim, num_labels, rng))?,
            head_bias: store.insert("gnn.head.b", Matrix::zeros(1, num_labels))?,
        })
    }

    /// Class logits for every node.
    pub fn logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        z: &Matrix,
        adjacency: &Rc<SparseRows>,
    ) -> Result<Var> {
        let mut h = g.constant(z.clone());
        for &id in &self.layers {
            let w = g.param(store, id);
            let mixed = g.sparse_mix(h, Rc::clone(adjacency))?;
            let lin = g.matmul(mixed, w)?;
            h = g.relu(lin);
        }
        let w = g.param(store, self.head_weight);
        let b = g.param(store, self.head_bias);
        g.linear(h, w, b)
    }

    /// Mean cross-entropy over the given `(node, label)` targets.
    pub fn loss(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        z: &Matrix,
        adjacency: &Rc<SparseRows>,
        targets: &[(usize, usize)],
    ) -> Result<Var> {
        let logits = self.logits(g, store, z, adjacency)?;
        g.softmax_xent(logits, targets)
    }
}

fn accuracy(logits: &Matrix, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let correct = nodes
        .iter()
        .filter(|&&v| {
            let row = logits.row(v);
            let best = (0..row.len())
                .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                .unwrap_or(0);
            best == labels[v]
        })
        .count();
    correct as f64 / nodes.len() as f64
}

/// Seeded train/validation split of node indices.
pub fn split_nodes(num_nodes: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut n_val = (val_fraction * num_nodes as f64).round() as usize;
    if num_nodes >= 2 {
        n_val = n_val.clamp(1, num_nodes - 1);
    } else {
        n_val = 0;
    }
    let val = order[..n_val].to_vec();
    let train = order[n_val..].to_vec();
    (train, val)
}

/// Trains message passing plus a softmax head on the training split.
pub fn pretrain_gnn(
    features: &NodeFeatures,
    pairs: &[(usize, usize)],
    cfg: &GnnConfig,
) -> Result<PretrainedGnn> {
    let m = features.z.rows();
    let distinct: std::collections::BTreeSet<usize> = features.labels.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateTask(format!(
            "node classification needs at least 2 labels, found {}",
            distinct.len()
        )));
    }
    if features.labels.len() != m {
        return Err(Error::Shape(format!(
            "{} labels for {m} feature rows",
            features.labels.len()
        )));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(Error::Config(format!(
            "validation fraction {} outside [0, 1)",
            cfg.val_fraction
        )));
    }
    let adjacency = Rc::new(neighborhood_mean(m, pairs)?);
    let (train, val) = split_nodes(m, cfg.val_fraction, cfg.split_seed);
    let targets: Vec<(usize, usize)> = train.iter().map(|&v| (v, features.labels[v])).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let mut store = ParamStore::new();
    let num_labels = features.num_labels.max(distinct.iter().max().unwrap() + 1);
    let ids = GnnIds::init(&mut store, features.z.cols(), cfg.layers, num_labels, &mut rng)?;

    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        store.zero_grad();
        let mut g = Graph::new();
        let loss = ids.loss(&mut g, &store, &features.z, &adjacency, &targets)?;
        let value = g.scalar(loss)?;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("gnn loss {value}")));
        }
        losses.push(value);
        g.backward(loss, &mut store)?;
        store.adam_step(cfg.learning_rate, AdamConfig::default());
    }

    let mut g = Graph::new();
    let logits = ids.logits(&mut g, &store, &features.z, &adjacency)?;
    let logits = g.value(logits);
    let report = GnnReport {
        train_accuracy: accuracy(logits, &features.labels, &train),
        val_accuracy: accuracy(logits, &features.labels, &val),
        train_nodes: train.len(),
        val_nodes: val.len(),
        losses,
    };
    Ok(PretrainedGnn {
        params: GnnParams {
            layers: ids.layers.iter().map(|&id| store.value(id).clone()).collect(),
        },
        head_weight: store.value(ids.head_weight).clone(),
        head_bias: store.value(ids.head_bias).clone(),
        report,
    })
}
