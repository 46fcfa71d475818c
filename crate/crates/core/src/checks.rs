//! Finite-difference checks of every training objective at toy sizes.

use std::collections::HashSet;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DatasetEntry, EntitySpan, KgeSpan, Vocab};
use crate::distill::{step_loss, LossWeights};
use crate::error::Result;
use crate::numeric::{grad_check, uniform, GradCheckConfig, GradCheckReport, Graph, ParamStore};
use crate::student::{StudentConfig, StudentModel};
use crate::teacher::gnn::{neighborhood_mean, GnnIds};
use crate::teacher::transr::{sample_corruptions, TransRIds};
use crate::teacher::{assemble_teacher, TeacherEmbedding, Triple};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub report: GradCheckReport,
}

fn toy_sentences() -> Vec<DatasetEntry> {
    let toks = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    vec![
        DatasetEntry {
            tokenized_text: toks("Aspirin treats Type 2 diabetes ."),
            ner: vec![EntitySpan::new(0, 0, "Drug"), EntitySpan::new(2, 4, "Disease")],
            kge: vec![KgeSpan::new(0, 0, "n1"), KgeSpan::new(2, 4, "n4")],
        },
        DatasetEntry {
            tokenized_text: toks("TP53 encodes Tau protein ."),
            ner: vec![EntitySpan::new(0, 0, "Gene"), EntitySpan::new(2, 3, "Drug")],
            kge: vec![KgeSpan::new(0, 0, "n7"), KgeSpan::new(2, 3, "n2")],
        },
    ]
}

fn toy_teacher(rng: &mut ChaCha8Rng) -> TeacherEmbedding {
    let m = 10;
    let ids = (0..m).map(|i| format!("n{i}")).collect();
    assemble_teacher(
        &uniform(m, 4, 1.0, rng),
        &uniform(m, 4, 1.0, rng),
        &uniform(m, 4, 1.0, rng),
        ids,
    )
    .expect("toy teacher")
}

/// Student objective in three weightings plus its two parts.
fn student_checks(cfg: GradCheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let teacher = toy_teacher(&mut rng);
    let entries = toy_sentences();
    let types: Vec<String> = ["Drug", "Disease", "Gene"].map(String::from).to_vec();
    let vocab = Vocab::from_tokens(entries.iter().flat_map(|e| e.tokenized_text.clone()).chain(types.clone()));
    let model = StudentModel::new(
        vocab,
        StudentConfig {
            hidden_size: 6,
            max_span_width: 3,
            dropout: 0.0,
            teacher_width: teacher.width(),
            distill_width: 4,
            seed: cfg.seed,
        },
    )?;
    let batch: Vec<&DatasetEntry> = entries.iter().collect();

    #[derive(Clone, Copy)]
    enum Part {
        Lang,
        Dist,
        Total,
    }
    let cases: [(&'static str, Part, LossWeights); 4] = [
        ("language", Part::Lang, LossWeights { a_bce: 1.0, b_dist: 0.0 }),
        ("distillation", Part::Dist, LossWeights { a_bce: 0.0, b_dist: 1.0 }),
        ("total (1, 1)", Part::Total, LossWeights { a_bce: 1.0, b_dist: 1.0 }),
        ("total (0.8, 0.2)", Part::Total, LossWeights { a_bce: 0.8, b_dist: 0.2 }),
    ];
    let mut out = Vec::new();
    for (name, part, weights) in cases {
        let mut store = model.store().clone();
        let report = grad_check(
            |g: &mut Graph, s: &ParamStore| {
                let m = model.with_store(s.clone())?;
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let l = step_loss(g, &m, &batch, &types, &teacher, weights, false, &mut rng)?;
                Ok(match part {
                    Part::Lang => l.lang,
                    Part::Dist => l.dist,
                    Part::Total => l.total,
                })
            },
            &mut store,
            cfg,
        )?;
        out.push(CheckOutcome { name, report });
    }
    Ok(out)
}

fn gnn_check(cfg: GradCheckConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6e6e);
    let (m, d, labels) = (10, 6, 3);
    let z = uniform(m, d, 1.0, &mut rng);
    let pairs: Vec<(usize, usize)> = (0..14).map(|_| (rng.random_range(0..m), rng.random_range(0..m))).collect();
    let adjacency = Rc::new(neighborhood_mean(m, &pairs)?);
    let targets: Vec<(usize, usize)> = (0..m).map(|v| (v, v % labels)).collect();
    let mut store = ParamStore::new();
    let ids = GnnIds::init(&mut store, d, 2, labels, &mut rng)?;
    let report = grad_check(
        |g: &mut Graph, s: &ParamStore| ids.loss(g, s, &z, &adjacency, &targets),
        &mut store,
        cfg,
    )?;
    Ok(CheckOutcome {
        name: "gnn cross-entropy",
        report,
    })
}

fn transr_check(cfg: GradCheckConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7472);
    let (m, relations, d) = (10, 2, 5);
    let triples: Vec<Triple> = (0..12)
        .map(|i| Triple::new(i % m, i % relations, (i * 3 + 1) % m))
        .collect();
    let known: HashSet<Triple> = triples.iter().copied().collect();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &t in &triples {
        for c in sample_corruptions(t, 2, m, &known, &mut rng) {
            pos.push(t);
            neg.push(c);
        }
    }
    let mut store = ParamStore::new();
    let ids = TransRIds::init(&mut store, m, relations, d, &mut rng)?;
    // perturb the identity projections so every entry carries gradient
    for &p in &ids.projections {
        let noise = uniform(d, d, 0.3, &mut rng);
        store.value_mut(p).add_assign(&noise)?;
    }
    // a margin this large keeps every hinge active and away from its kink
    let report = grad_check(
        |g: &mut Graph, s: &ParamStore| ids.margin_loss(g, s, &pos, &neg, 10.0),
        &mut store,
        cfg,
    )?;
    Ok(CheckOutcome {
        name: "transr margin",
        report,
    })
}

/// Runs every check with the given finite-difference configuration.
pub fn gradient_suite(cfg: GradCheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = student_checks(cfg)?;
    out.push(gnn_check(cfg)?);
    out.push(transr_check(cfg)?);
    Ok(out)
}
