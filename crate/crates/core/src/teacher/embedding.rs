//! The per-node teacher matrix `H = [Z, Z′, Z″]`.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::{read_container, write_container};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

const KIND: &str = "teacher-embedding";

/// Column ranges of the textual, propagated and relational blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocks {
    pub text: Range<usize>,
    pub spatial: Range<usize>,
    pub logical: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherEmbedding {
    h: Matrix,
    node_ids: Vec<String>,
    blocks: Blocks,
    id_index: HashMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    nodes: usize,
    text_dim: usize,
    relational_dim: usize,
    blocks: Blocks,
    node_ids: Vec<String>,
}

/// Concatenates `Z`, `Z′`, `Z″` column-wise and records where each block lives.
pub fn assemble_teacher(
    z: &Matrix,
    z_prop: &Matrix,
    z_rel: &Matrix,
    node_ids: Vec<String>,
) -> Result<TeacherEmbedding> {
    let m = z.rows();
    if z_prop.rows() != m || z_rel.rows() != m {
        return Err(Error::Shape(format!(
            "teacher blocks have {m}, {} and {} rows",
            z_prop.rows(),
            z_rel.rows()
        )));
    }
    if z.cols() != z_prop.cols() {
        return Err(Error::Shape(format!(
            "textual width {} differs from propagated width {}",
            z.cols(),
            z_prop.cols()
        )));
    }
    let (d1, d2) = (z.cols(), z_rel.cols());
    let h = Matrix::hconcat(&[z, z_prop, z_rel])?;
    assert_eq!(h.cols(), 2 * d1 + d2, "teacher width must be 2d' + d''");
    TeacherEmbedding::from_parts(
        h,
        node_ids,
        Blocks {
            text: 0..d1,
            spatial: d1..2 * d1,
            logical: 2 * d1..2 * d1 + d2,
        },
    )
}

impl TeacherEmbedding {
    fn from_parts(h: Matrix, node_ids: Vec<String>, blocks: Blocks) -> Result<Self> {
        if node_ids.len() != h.rows() {
            return Err(Error::Shape(format!(
                "{} node ids for {} teacher rows",
                node_ids.len(),
                h.rows()
            )));
        }
        let d1 = blocks.text.len();
        let consistent = blocks.text.start == 0
            && blocks.spatial == (d1..2 * d1)
            && blocks.logical.start == 2 * d1
            && blocks.logical.end == h.cols();
        if !consistent {
            return Err(Error::Integrity(format!(
                "block ranges {blocks:?} do not tile {} columns as 2d' + d''",
                h.cols()
            )));
        }
        let mut id_index = HashMap::with_capacity(node_ids.len());
        for (i, id) in node_ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate teacher node id {id:?}")));
            }
        }
        Ok(Self {
            h,
            node_ids,
            blocks,
            id_index,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.h
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn id_index(&self) -> &HashMap<String, usize> {
        &self.id_index
    }

    pub fn blocks(&self) -> &Blocks {
        &self.blocks
    }

    pub fn num_nodes(&self) -> usize {
        self.h.rows()
    }

    /// `r`
    pub fn width(&self) -> usize {
        self.h.cols()
    }

    /// `d′`
    pub fn text_dim(&self) -> usize {
        self.blocks.text.len()
    }

    /// `d″`
    pub fn relational_dim(&self) -> usize {
        self.blocks.logical.len()
    }

    /// Recovers `(Z, Z′, Z″)`.
    pub fn split(&self) -> Result<(Matrix, Matrix, Matrix)> {
        let b = &self.blocks;
        Ok((
            self.h.columns(b.text.start, b.text.end)?,
            self.h.columns(b.spatial.start, b.spatial.end)?,
            self.h.columns(b.logical.start, b.logical.end)?,
        ))
    }

    pub fn rows_for(&self, nodes: &[usize]) -> Result<Matrix> {
        self.h.select_rows(nodes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = Meta {
            nodes: self.num_nodes(),
            text_dim: self.text_dim(),
            relational_dim: self.relational_dim(),
            blocks: self.blocks.clone(),
            node_ids: self.node_ids.clone(),
        };
        write_container(path, KIND, &meta, &[("H", &self.h)])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, tensors): (Meta, _) = read_container(path, KIND)?;
        let [(name, h)]: [(String, Matrix); 1] = tensors
            .try_into()
            .map_err(|_| Error::Integrity("teacher file must hold exactly one tensor".into()))?;
        if name != "H" || h.rows() != meta.nodes || h.cols() != 2 * meta.text_dim + meta.relational_dim {
            return Err(Error::Integrity(format!(
                "teacher tensor {name} is {}x{}, header says {} nodes with d'={} d''={}",
                h.rows(),
                h.cols(),
                meta.nodes,
                meta.text_dim,
                meta.relational_dim
            )));
        }
        Self::from_parts(h, meta.node_ids, meta.blocks)
    }
}
