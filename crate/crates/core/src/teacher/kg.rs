//! Typed nodes with descriptions, and typed directed edges.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgNode {
    pub node_id: String,
    pub type_label: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct EdgeRecord {
    head_id: String,
    relation_type: String,
    tail_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<KgNode>,
    relations: Vec<String>,
    edges: Vec<Triple>,
    labels: Vec<String>,
    id_index: HashMap<String, usize>,
}

impl KnowledgeGraph {
    /// Validates ids, descriptions and edge endpoints. Label and relation
    /// indices follow first-seen order.
    pub fn new(nodes: Vec<KgNode>, edges: &[(String, String, String)]) -> Result<Self> {
        let mut id_index = HashMap::with_capacity(nodes.len());
        let mut labels: Vec<String> = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.node_id.trim().is_empty() {
                return Err(Error::Config(format!("node {i} has an empty id")));
            }
            if id_index.insert(n.node_id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate node id {:?}", n.node_id)));
            }
            if n.description.trim().is_empty() {
                return Err(Error::Config(format!("node {:?} has an empty description", n.node_id)));
            }
            if n.type_label.trim().is_empty() {
                return Err(Error::Config(format!("node {:?} has an empty type label", n.node_id)));
            }
            if !labels.contains(&n.type_label) {
                labels.push(n.type_label.clone());
            }
        }
        let mut relations: Vec<String> = Vec::new();
        let mut triples = Vec::with_capacity(edges.len());
        for (h, r, t) in edges {
            let head = *id_index
                .get(h)
                .ok_or_else(|| Error::Config(format!("edge head {h:?} is not a node")))?;
            let tail = *id_index
                .get(t)
                .ok_or_else(|| Error::Config(format!("edge tail {t:?} is not a node")))?;
            let relation = match relations.iter().position(|x| x == r) {
                Some(p) => p,
                None => {
                    relations.push(r.clone());
                    relations.len() - 1
                }
            };
            triples.push(Triple::new(head, relation, tail));
        }
        Ok(Self {
            nodes,
            relations,
            edges: triples,
            labels,
            id_index,
        })
    }

    pub fn nodes(&self) -> &[KgNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn id_index(&self) -> &HashMap<String, usize> {
        &self.id_index
    }

    /// Label index per node.
    pub fn label_indices(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .map(|n| self.labels.iter().position(|l| *l == n.type_label).expect("label"))
            .collect()
    }

    /// Distinct undirected node pairs, self-loops dropped.
    pub fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.head != e.tail)
            .map(|e| (e.head.min(e.tail), e.head.max(e.tail)))
            .collect();
        set.into_iter().collect()
    }

    pub fn triple_set(&self) -> HashSet<Triple> {
        self.edges.iter().copied().collect()
    }

    pub fn load(nodes_path: &Path, edges_path: &Path, delimiter: u8) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_path(nodes_path)?;
        let nodes = rd.deserialize::<KgNode>().collect::<std::result::Result<Vec<_>, _>>()?;
        let mut rd = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_path(edges_path)?;
        let edges = rd
            .deserialize::<EdgeRecord>()
            .map(|r| r.map(|e| (e.head_id, e.relation_type, e.tail_id)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(nodes, &edges)
    }

    pub fn save(&self, nodes_path: &Path, edges_path: &Path, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_path(nodes_path)?;
        for n in &self.nodes {
            w.serialize(n)?;
        }
        w.flush()?;
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_path(edges_path)?;
        for e in &self.edges {
            w.serialize(EdgeRecord {
                head_id: self.nodes[e.head].node_id.clone(),
                relation_type: self.relations[e.relation].clone(),
                tail_id: self.nodes[e.tail].node_id.clone(),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
