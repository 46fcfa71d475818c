//! Knowledge-graph teacher: textual, propagated and relational node features.

mod embedding;
mod features;
pub mod gnn;
mod kg;
pub mod transr;

pub use embedding::{assemble_teacher, Blocks, TeacherEmbedding};
pub use features::{encode_descriptions, DescriptionEncoder, NodeFeatures};
pub use gnn::{neighborhood_mean, pretrain_gnn, propagate, GnnConfig, GnnParams, GnnReport, PretrainedGnn};
pub use kg::{KgNode, KnowledgeGraph, Triple};
pub use transr::{
    filtered_hits_at, train_transr, transr_score, TransRConfig, TransRParams, TransRTraining,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherConfig {
    /// `d′`, width of the textual and propagated blocks.
    pub kg_hidden: usize,
    /// `d″`; `None` uses `kg_hidden`.
    pub relational_dim: Option<usize>,
    pub gnn: GnnConfig,
    pub transr: TransRConfig,
    pub seed: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            kg_hidden: 58,
            relational_dim: None,
            gnn: GnnConfig::default(),
            transr: TransRConfig::default(),
            seed: 0,
        }
    }
}

/// The built teacher together with what its pretraining reported.
#[derive(Debug, Clone)]
pub struct BuiltTeacher {
    pub embedding: TeacherEmbedding,
    pub gnn: PretrainedGnn,
    pub transr_losses: Vec<f64>,
}

pub fn build_teacher(kg: &KnowledgeGraph, cfg: &TeacherConfig) -> Result<BuiltTeacher> {
    let encoder = DescriptionEncoder::seeded(kg, cfg.kg_hidden, cfg.seed);
    let features = encode_descriptions(kg, &encoder)?;
    let pairs = kg.undirected_pairs();
    let gnn = pretrain_gnn(&features, &pairs, &cfg.gnn)?;
    log::info!(
        "gnn pretraining: train acc {:.3}, val acc {:.3}",
        gnn.report.train_accuracy,
        gnn.report.val_accuracy
    );
    let adjacency = neighborhood_mean(kg.node_count(), &pairs)?;
    let z_prop = propagate(&features.z, &adjacency, &gnn.params)?;
    let transr_cfg = TransRConfig {
        dim: cfg.relational_dim.unwrap_or(cfg.kg_hidden),
        ..cfg.transr
    };
    let transr = train_transr(kg, &transr_cfg)?;
    let node_ids = kg.nodes().iter().map(|n| n.node_id.clone()).collect();
    let embedding = assemble_teacher(&features.z, &z_prop, &transr.params.entities, node_ids)?;
    Ok(BuiltTeacher {
        embedding,
        gnn,
        transr_losses: transr.epoch_losses,
    })
}
