//! Small seeded worlds for tests, demos and the CLI `gen-data` default.
//!
//! [`toy_world`] is a 40-entity biomedical knowledge graph with six entity
//! types and three relations, plus templates that turn every edge into six
//! sentences.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{generate_with_skeleton, DatasetEntry, RelationRow, TemplateSet};
use crate::error::{Error, Result};
use crate::numeric::uniform;
use crate::teacher::{KgNode, KnowledgeGraph, NodeFeatures};

pub const TOY_TYPES: [&str; 6] = ["Gene", "Protein", "Disease", "Drug", "Pathway", "CellType"];

const GENES: [&str; 7] = ["BRCA1", "TP53", "EGFR", "KRAS", "MYC", "PTEN", "APOE"];
const PROTEINS: [&str; 7] = [
    "Insulin",
    "Hemoglobin",
    "Tau protein",
    "Collagen",
    "Albumin",
    "Keratin",
    "Growth hormone",
];
const DISEASES: [&str; 7] = [
    "Breast cancer",
    "Alzheimer disease",
    "Type 2 diabetes",
    "Asthma",
    "Psoriasis",
    "Leukemia",
    "Cystic fibrosis",
];
const DRUGS: [&str; 7] = [
    "Metformin",
    "Aspirin",
    "Imatinib",
    "Tamoxifen",
    "Donepezil",
    "Albuterol",
    "Ivacaftor",
];
const PATHWAYS: [&str; 6] = [
    "Wnt signaling",
    "Apoptosis",
    "Glycolysis",
    "Autophagy",
    "mTOR pathway",
    "Notch signaling",
];
const CELL_TYPES: [&str; 6] = [
    "T cell",
    "Neuron",
    "Hepatocyte",
    "Macrophage",
    "Keratinocyte",
    "Beta cell",
];

fn describe(ty: &str, name: &str) -> String {
    let tail = match ty {
        "Gene" => "is a human gene locus with variants studied in genetics",
        "Protein" => "is a folded protein molecule built from amino acids",
        "Disease" => "is a chronic disorder with clinical symptoms in patients",
        "Drug" => "is a pharmaceutical compound given as medication",
        "Pathway" => "is a molecular signaling cascade inside tissues",
        _ => "is a specialised cell population of the body",
    };
    format!("{name} {tail}")
}

fn templates() -> TemplateSet {
    let t = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut m = BTreeMap::new();
    m.insert(
        "encodes".to_string(),
        t(&[
            "HEAD encodes TAIL .",
            "The locus HEAD is known to encode TAIL .",
            "TAIL is produced from the HEAD transcript .",
            "Expression of HEAD yields TAIL in most tissues .",
            "Researchers confirmed that HEAD codes for TAIL .",
            "Mutations in HEAD disrupt the synthesis of TAIL .",
        ]),
    );
    m.insert(
        "treats".to_string(),
        t(&[
            "HEAD treats TAIL .",
            "Patients with TAIL often receive HEAD .",
            "HEAD is prescribed for TAIL .",
            "Clinical trials show HEAD improves outcomes in TAIL .",
            "For TAIL , doctors may recommend HEAD .",
            "HEAD was approved to manage TAIL .",
        ]),
    );
    m.insert(
        "associated_with".to_string(),
        t(&[
            "HEAD is associated with TAIL .",
            "Studies link HEAD to TAIL .",
            "A connection between HEAD and TAIL was reported .",
            "TAIL has been related to HEAD in several cohorts .",
            "Changes in HEAD accompany TAIL .",
            "HEAD plays a role in TAIL .",
        ]),
    );
    TemplateSet::new(m).expect("toy templates are well formed")
}

#[derive(Debug, Clone)]
pub struct ToyWorld {
    pub kg: KnowledgeGraph,
    pub rows: Vec<RelationRow>,
    pub templates: TemplateSet,
}

pub fn toy_world() -> ToyWorld {
    let groups: [(&str, &[&str]); 6] = [
        ("Gene", &GENES),
        ("Protein", &PROTEINS),
        ("Disease", &DISEASES),
        ("Drug", &DRUGS),
        ("Pathway", &PATHWAYS),
        ("CellType", &CELL_TYPES),
    ];
    let id = |ty: &str, i: usize| format!("{}:{i}", ty.to_lowercase());
    let mut nodes = Vec::new();
    for (ty, names) in groups {
        for (i, name) in names.iter().enumerate() {
            nodes.push(KgNode {
                node_id: id(ty, i),
                type_label: ty.to_string(),
                description: describe(ty, name),
            });
        }
    }
    let mut rows = Vec::new();
    let mut relate = |rel: &str, (ht, hn): (&str, &[&str]), (tt, tn): (&str, &[&str]), parity: usize| {
        for (a, h) in hn.iter().enumerate() {
            for (b, t) in tn.iter().enumerate() {
                if (a + b) % 2 == parity {
                    rows.push(RelationRow {
                        head_entity_id: id(ht, a),
                        head_entity_name: h.to_string(),
                        tail_entity_id: id(tt, b),
                        tail_entity_name: t.to_string(),
                        relation_type: rel.to_string(),
                        head_type: ht.to_string(),
                        tail_type: tt.to_string(),
                    });
                }
            }
        }
    };
    relate("encodes", groups[0], groups[1], 0);
    relate("treats", groups[3], groups[2], 0);
    relate("associated_with", groups[4], groups[2], 0);
    relate("associated_with", groups[5], groups[1], 1);
    let edges: Vec<(String, String, String)> = rows
        .iter()
        .map(|r| (r.head_entity_id.clone(), r.relation_type.clone(), r.tail_entity_id.clone()))
        .collect();
    let kg = KnowledgeGraph::new(nodes, &edges).expect("toy graph is well formed");
    ToyWorld {
        kg,
        rows,
        templates: templates(),
    }
}

impl ToyWorld {
    /// Every row rendered with every skeleton of its relation.
    pub fn sentences(&self) -> Result<Vec<DatasetEntry>> {
        let mut out = Vec::new();
        for row in &self.rows {
            let n = self.templates.skeletons(&row.relation_type).map_or(0, <[String]>::len);
            for k in 0..n {
                let g = generate_with_skeleton(row, &self.templates, k)?;
                if !g.ambiguous {
                    out.push(g.entry);
                }
            }
        }
        Ok(out)
    }
}

/// Seeded shuffle, then the first `1 − test_fraction` for training.
pub fn split_entries(
    entries: &[DatasetEntry],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<DatasetEntry>, Vec<DatasetEntry>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut shuffled = entries.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (entries.len() as f64 * test_fraction).round() as usize;
    let test = shuffled.split_off(entries.len() - n_test);
    Ok((shuffled, test))
}

/// `n` nodes linked `v_i → v_{i+1}` by a single relation `next`.
pub fn chain_kg(n: usize) -> KnowledgeGraph {
    let nodes = (0..n)
        .map(|i| KgNode {
            node_id: format!("v{i}"),
            type_label: "Step".into(),
            description: format!("step {i} of the chain"),
        })
        .collect();
    let edges: Vec<_> = (1..n)
        .map(|i| (format!("v{}", i - 1), "next".to_string(), format!("v{i}")))
        .collect();
    KnowledgeGraph::new(nodes, &edges).expect("chain is well formed")
}

/// Two disconnected cliques whose features lean toward their label.
pub fn two_cliques(size: usize, dim: usize, seed: u64) -> (NodeFeatures, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = uniform(2 * size, dim, 0.5, &mut rng);
    let labels: Vec<usize> = (0..2 * size).map(|v| v / size).collect();
    for (v, &l) in labels.iter().enumerate() {
        let c = l % dim;
        z.set(v, c, z.get(v, c) + 1.0);
    }
    let mut pairs = Vec::new();
    for c in 0..2 {
        for a in 0..size {
            for b in a + 1..size {
                pairs.push((c * size + a, c * size + b));
            }
        }
    }
    (
        NodeFeatures {
            z,
            labels,
            num_labels: 2,
        },
        pairs,
    )
}

/// Uniformly random labels, noise features and random edges.
pub fn random_label_graph(
    nodes: usize,
    num_labels: usize,
    dim: usize,
    edges: usize,
    seed: u64,
) -> (NodeFeatures, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = uniform(nodes, dim, 1.0, &mut rng);
    let labels = (0..nodes).map(|_| rng.random_range(0..num_labels)).collect();
    let pairs = (0..edges)
        .map(|_| (rng.random_range(0..nodes), rng.random_range(0..nodes)))
        .collect();
    (
        NodeFeatures {
            z,
            labels,
            num_labels,
        },
        pairs,
    )
}
