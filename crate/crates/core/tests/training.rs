use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kogner::data::{read_dataset, DatasetEntry, EntitySpan, KgeSpan};
use kogner::distill::{
    distill_loss, init_student, load_checkpoint, step_loss, train, train_model, LossWeights, TrainConfig,
};
use kogner::eval::evaluate;
use kogner::numeric::{uniform, Graph, Matrix};
use kogner::teacher::{assemble_teacher, TeacherEmbedding};
use kogner::Error;

fn toks(s: &str) -> Vec<String> {
    s.split(' ').map(String::from).collect()
}

fn corpus() -> Vec<DatasetEntry> {
    vec![
        DatasetEntry {
            tokenized_text: toks("Aspirin treats Asthma ."),
            ner: vec![EntitySpan::new(0, 0, "Drug"), EntitySpan::new(2, 2, "Disease")],
            kge: vec![KgeSpan::new(0, 0, "d0"), KgeSpan::new(2, 2, "s0")],
        },
        DatasetEntry {
            tokenized_text: toks("Patients with Breast cancer receive Tamoxifen ."),
            ner: vec![EntitySpan::new(2, 3, "Disease"), EntitySpan::new(5, 5, "Drug")],
            kge: vec![KgeSpan::new(2, 3, "s1"), KgeSpan::new(5, 5, "d1")],
        },
        DatasetEntry {
            tokenized_text: toks("Metformin is prescribed for Type 2 diabetes ."),
            ner: vec![EntitySpan::new(0, 0, "Drug"), EntitySpan::new(4, 6, "Disease")],
            kge: vec![KgeSpan::new(0, 0, "d2"), KgeSpan::new(4, 6, "s2")],
        },
    ]
}

fn teacher(d: usize, seed: u64) -> TeacherEmbedding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = ["d0", "d1", "d2", "s0", "s1", "s2"].map(String::from).to_vec();
    let n = ids.len();
    assemble_teacher(
        &uniform(n, d, 1.0, &mut rng),
        &uniform(n, d, 1.0, &mut rng),
        &uniform(n, d, 1.0, &mut rng),
        ids,
    )
    .unwrap()
}

fn small_config() -> TrainConfig {
    TrainConfig {
        max_span_width: 3,
        hidden_size: 8,
        kg_hidden: 4,
        distill_width: 4,
        dropout: 0.0,
        steps: 40,
        batch: 2,
        learning_rate: 0.01,
        ..TrainConfig::default()
    }
}

#[test]
fn teacher_is_frozen_but_shapes_the_distillation_loss() {
    let entries = corpus();
    let types = ["Drug".to_string(), "Disease".to_string()];
    let t = teacher(4, 0);
    let cfg = small_config();
    let model = init_student(&entries, &types, &t, &cfg).unwrap();
    let batch: Vec<&DatasetEntry> = entries.iter().collect();

    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let loss = step_loss(&mut g, &model, &batch, &types, &t, cfg.weights(), false, &mut rng).unwrap();
    let base = g.scalar(loss.dist).unwrap();
    let mut store = model.store().clone();
    let grads = g.backward(loss.total, &mut store).unwrap();
    assert!(grads.wrt(loss.h_sub).is_none());

    // re-evaluate ℒ_dist with one teacher entry nudged
    let h = g.value(loss.h_sub).clone();
    let mut bumped = h.clone();
    bumped.set(0, 0, h.get(0, 0) + 1e-3);
    let mut g2 = Graph::new();
    let s = g2.constant(g.value(loss.s_sub).clone());
    let hb = g2.constant(bumped);
    let moved = distill_loss(&mut g2, &model, s, hb).unwrap();
    assert_ne!(g2.scalar(moved).unwrap(), base);
    let grads = g2.backward(moved, &mut store).unwrap();
    assert!(grads.wrt(hb).is_none());
}

#[test]
fn unit_weights_recover_the_plain_sum() {
    let entries = corpus();
    let types = ["Drug".to_string(), "Disease".to_string()];
    let t = teacher(4, 1);
    let cfg = small_config().unit_weights();
    assert_eq!(cfg.weights(), LossWeights { a_bce: 1.0, b_dist: 1.0 });
    let model = init_student(&entries, &types, &t, &cfg).unwrap();
    let batch: Vec<&DatasetEntry> = entries.iter().collect();
    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let l = step_loss(&mut g, &model, &batch, &types, &t, cfg.weights(), false, &mut rng).unwrap();
    let (lang, dist, total) = (g.scalar(l.lang).unwrap(), g.scalar(l.dist).unwrap(), g.scalar(l.total).unwrap());
    assert_eq!(total, lang + dist);
}

#[test]
fn non_finite_loss_aborts_with_a_dump() {
    let entries = corpus();
    let n = 6;
    let ids: Vec<String> = ["d0", "d1", "d2", "s0", "s1", "s2"].map(String::from).to_vec();
    let poisoned = Matrix::filled(n, 4, f64::NAN);
    let t = assemble_teacher(&poisoned, &poisoned, &poisoned, ids).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = train(&entries, &t, &small_config(), Some(dir.path())).unwrap_err();
    assert!(matches!(err, Error::TrainingAborted { step: 0, .. }), "{err}");
    let dumped = read_dataset(&dir.path().join("aborted_batch.jsonl")).unwrap();
    assert_eq!(dumped.len(), 2);
    assert_eq!(load_checkpoint(&dir.path().join("last_good.ckpt")).unwrap().step, 0);
    assert!(!dir.path().join("final.ckpt").exists());
}

#[test]
fn zero_steps_still_writes_a_checkpoint() {
    let entries = corpus();
    let t = teacher(4, 2);
    let cfg = TrainConfig {
        steps: 0,
        ..small_config()
    };
    let dir = tempfile::tempdir().unwrap();
    let out = train(&entries, &t, &cfg, Some(dir.path())).unwrap();
    assert!(out.report.rows.is_empty());
    let path = out.report.checkpoint.unwrap();
    let ck = load_checkpoint(&path).unwrap();
    assert_eq!(ck.step, 0);
    let bits = |m: &kogner::student::StudentModel| -> Vec<u64> {
        m.store().iter().flat_map(|p| p.value.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect()
    };
    assert_eq!(bits(&ck.model), bits(&out.model));
}

#[test]
fn mismatched_teacher_width_is_rejected() {
    let entries = corpus();
    let t = teacher(5, 3);
    let err = train(&entries, &t, &small_config(), None).unwrap_err();
    assert!(matches!(err, Error::Mismatch(_)), "{err}");
}

#[test]
fn checkpoint_reload_evaluates_identically() {
    let entries = corpus();
    let t = teacher(4, 4);
    let cfg = TrainConfig {
        checkpoint_interval: 15,
        ..small_config()
    };
    let dir = tempfile::tempdir().unwrap();
    let out = train(&entries, &t, &cfg, Some(dir.path())).unwrap();
    assert!(dir.path().join("step-15.ckpt").exists());
    assert!(dir.path().join("step-30.ckpt").exists());
    let ck = load_checkpoint(&dir.path().join("final.ckpt")).unwrap();
    ck.check_against(&cfg).unwrap();
    assert_eq!(ck.types, out.report.types);
    let a = evaluate(&out.model, &entries, &ck.types, 0.5).unwrap();
    let b = evaluate(&ck.model, &entries, &ck.types, 0.5).unwrap();
    let c = evaluate(&ck.model, &entries, &ck.types, 0.5).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(b.metrics, c.metrics);
    assert_eq!(b.predictions, c.predictions);

    let wider = TrainConfig {
        hidden_size: 16,
        ..cfg
    };
    let msg = ck.check_against(&wider).unwrap_err().to_string();
    assert!(msg.contains('8') && msg.contains("16"), "{msg}");
}

#[test]
fn report_log_has_one_row_per_step() {
    let entries = corpus();
    let t = teacher(4, 5);
    let out = train(&entries, &t, &small_config(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.tsv");
    out.report.write_tsv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step\tlr\tlang\tdist\ttotal"));
    assert_eq!(lines.count(), 40);
    assert_eq!(out.report.summary()["steps"], 40);
}

#[test]
fn language_loss_descends_on_one_sentence() {
    let entries = vec![corpus().remove(1)];
    let t = teacher(4, 6);
    let cfg = TrainConfig {
        steps: 101,
        batch: 1,
        b_dist: 0.0,
        a_bce: 1.0,
        warmup_ratio: 0.0,
        learning_rate: 1e-3,
        ..small_config()
    };
    let types = ["Drug".to_string(), "Disease".to_string()];
    let model = init_student(&entries, &types, &t, &cfg).unwrap();
    let out = train_model(model, &entries, &types, &t, &cfg, None).unwrap();
    let lang: Vec<f64> = out.report.rows.iter().map(|r| r.lang).collect();
    let down = lang.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(down >= 95, "{down} of 100 steps decreased");
}

#[test]
fn moving_average_settles_after_warmup() {
    let world = kogner::fixture::toy_world();
    let sentences = world.sentences().unwrap();
    let t = kogner::teacher::build_teacher(&world.kg, &kogner::teacher::TeacherConfig::default())
        .unwrap()
        .embedding;
    let cfg = TrainConfig {
        steps: 600,
        ..TrainConfig::default()
    };
    let out = train(&sentences, &t, &cfg, None).unwrap();
    let total: Vec<f64> = out.report.rows.iter().map(|r| r.total).collect();
    let avg: Vec<f64> = total.windows(100).map(|w| w.iter().sum::<f64>() / 100.0).collect();
    let warmup = (cfg.warmup_ratio * cfg.steps as f64) as usize;
    for k in warmup + 1..avg.len() {
        assert!(avg[k] <= 1.05 * avg[k - 1], "window {k}: {} after {}", avg[k], avg[k - 1]);
    }
    assert!(avg[avg.len() - 1] < 0.5 * avg[0]);
}
