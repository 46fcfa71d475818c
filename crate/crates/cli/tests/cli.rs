use std::path::Path;
use std::process::{Command, Output};

fn kogner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kogner"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_lines(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stderr).lines().map(String::from).collect()
}

fn gen_data(dir: &Path) {
    let o = kogner(&["gen-data", "--out", arg(dir)]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
}

#[test]
fn clean_data_checks_out() {
    let dir = tempfile::tempdir().unwrap();
    gen_data(dir.path());
    let o = kogner(&["check-data", "--in", arg(&dir.path().join("dataset.jsonl"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 errors"));
}

#[test]
fn invalid_data_exits_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(&path, "{\"tokenized_text\": [\"a\"], \"ner\": [[0, 4, \"X\"]]}\nnot json\n").unwrap();
    let o = kogner(&["check-data", "--in", arg(&path)]);
    assert_eq!(o.status.code(), Some(3));
    let last = stderr_lines(&o).pop().unwrap();
    assert!(last.starts_with("error: validation: "), "{last}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 errors"));
}

#[test]
fn usage_errors_exit_2() {
    let o = kogner(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_lines(&o)[0].starts_with("error: usage: "));
    let o = kogner(&["eval", "--data", "x.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_1_with_a_class() {
    let o = kogner(&["check-data", "--in", "/nonexistent/file.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr_lines(&o).pop().unwrap().starts_with("error: io: "));
}

#[test]
fn train_is_reproducible_and_eval_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_data(d);
    let o = kogner(&[
        "build-teacher",
        "--nodes",
        arg(&d.join("nodes.tsv")),
        "--edges",
        arg(&d.join("edges.tsv")),
        "--out",
        arg(d),
    ]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let teacher: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(teacher["width"], 174);

    let run = |name: &str| {
        let out = d.join(name);
        let o = kogner(&[
            "train",
            "--data",
            arg(&d.join("train.jsonl")),
            "--teacher",
            arg(&d.join("teacher.bin")),
            "--steps",
            "30",
            "--seed",
            "7",
            "--out",
            arg(&out),
        ]);
        assert!(o.status.success(), "{:?}", stderr_lines(&o));
        std::fs::read_to_string(out.join("train_log.tsv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.lines().count(), 31);
    assert_eq!(a, b);

    let o = kogner(&[
        "eval",
        "--checkpoint",
        arg(&d.join("a/final.ckpt")),
        "--data",
        arg(&d.join("test.jsonl")),
        "--types",
        "Gene,Disease,Drug",
        "--out",
        arg(&d.join("a")),
    ]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["tp", "fp", "fn", "precision", "recall", "f1", "per_type"] {
        assert!(m.get(key).is_some(), "missing {key}");
    }
    assert!(d.join("a/predictions.jsonl").exists());
}

#[test]
fn unit_weights_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_data(d);
    let (nodes, edges) = (d.join("nodes.tsv"), d.join("edges.tsv"));
    let graph = ["--nodes", arg(&nodes), "--edges", arg(&edges)];
    let o = kogner(&[&["build-teacher"][..], &graph, &["--out", arg(d)]].concat());
    assert!(o.status.success());
    let o = kogner(&[
        "train",
        "--data",
        arg(&d.join("train.jsonl")),
        "--teacher",
        arg(&d.join("teacher.bin")),
        "--steps",
        "2",
        "--unit-weights",
        "--out",
        arg(&d.join("r")),
    ]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r/run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["a_bce"], 1.0);
    assert_eq!(cfg["b_dist"], 1.0);
}

#[test]
fn grad_check_passes() {
    let o = kogner(&["grad-check", "--seed", "3"]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn pretraining_subcommands_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_data(d);
    let (nodes, edges) = (d.join("nodes.tsv"), d.join("edges.tsv"));
    let graph = ["--nodes", arg(&nodes), "--edges", arg(&edges)];
    let o = kogner(&[&["pretrain-gnn"][..], &graph, &["--out", arg(d)]].concat());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["val_accuracy"].as_f64().unwrap() >= 0.9);
    let o = kogner(&[&["pretrain-transr"][..], &graph, &["--out", arg(d)]].concat());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["hits_at_10"].as_f64().unwrap() >= 0.8);
}
