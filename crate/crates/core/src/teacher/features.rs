//! Textual node features: mean of description-token embeddings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{tokenize_text, Vocab};
use crate::error::{Error, Result};
use crate::numeric::{uniform, Matrix};
use crate::teacher::KnowledgeGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    /// M × d′ encoded descriptions.
    pub z: Matrix,
    /// Label index per node.
    pub labels: Vec<usize>,
    pub num_labels: usize,
}

/// Frozen token embeddings used to encode node descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptionEncoder {
    pub vocab: Vocab,
    pub table: Matrix,
}

impl DescriptionEncoder {
    pub fn new(vocab: Vocab, table: Matrix) -> Result<Self> {
        if table.rows() != vocab.len() {
            return Err(Error::Shape(format!(
                "token table has {} rows for a vocabulary of {}",
                table.rows(),
                vocab.len()
            )));
        }
        Ok(Self { vocab, table })
    }

    /// Vocabulary from the graph's descriptions with a seeded uniform table.
    pub fn seeded(kg: &KnowledgeGraph, dim: usize, seed: u64) -> Self {
        let vocab = Vocab::from_tokens(kg.nodes().iter().flat_map(|n| tokenize_text(&n.description)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = uniform(vocab.len(), dim, 1.0, &mut rng);
        Self { vocab, table }
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    /// Mean embedding over the text's tokens; unknown tokens use the UNK row.
    pub fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let ids = self.vocab.ids(&tokenize_text(text));
        if ids.is_empty() {
            return Err(Error::EmptyInput(format!("description {text:?} has no tokens")));
        }
        let mut out = vec![0.0; self.dim()];
        for &id in &ids {
            for (o, v) in out.iter_mut().zip(self.table.row(id)) {
                *o += v;
            }
        }
        let n = ids.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        Ok(out)
    }
}

pub fn encode_descriptions(kg: &KnowledgeGraph, encoder: &DescriptionEncoder) -> Result<NodeFeatures> {
    let rows = kg
        .nodes()
        .iter()
        .map(|n| encoder.encode(&n.description))
        .collect::<Result<Vec<_>>>()?;
    let z = if rows.is_empty() {
        Matrix::zeros(0, encoder.dim())
    } else {
        Matrix::from_rows(&rows)?
    };
    Ok(NodeFeatures {
        z,
        labels: kg.label_indices(),
        num_labels: kg.labels().len(),
    })
}
