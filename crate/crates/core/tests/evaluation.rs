use proptest::prelude::*;

use kogner::data::{DatasetEntry, EntitySpan, KgeSpan};
use kogner::distill::{init_student, TrainConfig};
use kogner::eval::{decode, evaluate, micro_f1};
use kogner::fixture::toy_world;
use kogner::numeric::Matrix;
use kogner::student::enumerate_spans;
use kogner::teacher::{build_teacher, TeacherConfig};

fn scores_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
    (1usize..7, 1usize..4, 1usize..4)
        .prop_flat_map(|(t, w, k)| (Just(t), Just(w), Just(k), prop::collection::vec(0.0f64..1.0, t * w * k)))
}

fn type_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("T{i}")).collect()
}

proptest! {
    #[test]
    fn decoded_spans_are_valid_and_disjoint((t, w, k, v) in scores_strategy(), threshold in 0.01f64..0.99) {
        let spans = enumerate_spans(t, w).unwrap();
        let scores = Matrix::from_vec(t * w, k, v).unwrap();
        let out = decode(&scores, &spans, &type_names(k), threshold);
        for (i, a) in out.iter().enumerate() {
            prop_assert!(a.start <= a.end && a.end < t && a.end - a.start < w);
            prop_assert!(a.score > threshold);
            for b in &out[i + 1..] {
                prop_assert!(!a.overlaps(b));
            }
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_spans((t, w, k, v) in scores_strategy(), lo in 0.0f64..1.0, gap in 0.0f64..0.5) {
        let spans = enumerate_spans(t, w).unwrap();
        let scores = Matrix::from_vec(t * w, k, v).unwrap();
        let names = type_names(k);
        let low = decode(&scores, &spans, &names, lo);
        let high = decode(&scores, &spans, &names, lo + gap);
        prop_assert!(high.len() <= low.len());
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall(
        a in prop::collection::vec((0usize..5, 0usize..2, 0usize..3), 0..6),
        b in prop::collection::vec((0usize..5, 0usize..2, 0usize..3), 0..6),
    ) {
        let to_spans = |v: &[(usize, usize, usize)]| -> Vec<EntitySpan> {
            v.iter().map(|&(s, w, l)| EntitySpan::new(s, s + w, ["A", "B", "C"][l])).collect()
        };
        let (p, g) = (vec![to_spans(&a)], vec![to_spans(&b)]);
        let fwd = micro_f1(&p, &g).unwrap().micro;
        let back = micro_f1(&g, &p).unwrap().micro;
        prop_assert_eq!(fwd.precision, back.recall);
        prop_assert_eq!(fwd.recall, back.precision);
        prop_assert_eq!(fwd.f1, back.f1);
    }
}

#[test]
fn threshold_sweep_is_monotone_on_one_matrix() {
    let spans = enumerate_spans(5, 3).unwrap();
    let values: Vec<f64> = (0..30).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
    let scores = Matrix::from_vec(15, 2, values).unwrap();
    let counts: Vec<usize> = (1..20)
        .map(|k| decode(&scores, &spans, &["A", "B"], k as f64 / 20.0).len())
        .collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[0] > 0);
}

#[test]
fn untrained_model_scores_near_zero_and_handles_unseen_types() {
    let world = toy_world();
    let sentences = world.sentences().unwrap();
    let teacher = build_teacher(&world.kg, &TeacherConfig::default()).unwrap().embedding;
    let types = kogner::data::collect_labels(&sentences);
    let model = init_student(&sentences, &types, &teacher, &TrainConfig::default()).unwrap();
    let eval = evaluate(&model, &sentences, &types, 0.5).unwrap();
    assert!(eval.metrics.micro.f1 <= 0.1, "{}", eval.metrics.micro.f1);

    let unseen = ["Chemical compound", "Organism", "Gene"];
    let (spans, scores) = model.score_sentence(&sentences[0].tokenized_text, &unseen).unwrap();
    assert_eq!(scores.shape(), (spans.len(), 3));
    assert!(scores.values().iter().all(|&p| p > 0.0 && p < 1.0));
    evaluate(&model, &sentences[..20], &unseen, 0.5).unwrap();
}

#[test]
fn invalid_entries_are_listed_and_skipped() {
    let world = toy_world();
    let mut sentences = world.sentences().unwrap();
    sentences.truncate(5);
    sentences.push(DatasetEntry {
        tokenized_text: vec!["TP53".into()],
        ner: vec![EntitySpan::new(0, 3, "Gene")],
        kge: vec![KgeSpan::new(0, 3, "gene:1")],
    });
    sentences.push(DatasetEntry {
        tokenized_text: vec![],
        ner: vec![],
        kge: vec![],
    });
    let teacher = build_teacher(&world.kg, &TeacherConfig::default()).unwrap().embedding;
    let types = kogner::data::collect_labels(&sentences[..5]);
    let model = init_student(&sentences[..5], &types, &teacher, &TrainConfig::default()).unwrap();
    let eval = evaluate(&model, &sentences, &types, 0.5).unwrap();
    assert_eq!(eval.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), [5, 6]);
    assert_eq!(eval.predictions.len(), 5);
}
