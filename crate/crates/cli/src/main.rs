use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize};
use serde_json::json;

use kogner::checks::gradient_suite;
use kogner::data::{
    generate_entry, read_dataset, read_relation_rows, scan_dataset, subsample_rows, training_subset,
    write_dataset, write_relation_rows, DatasetEntry, TemplateSet,
};
use kogner::distill::{load_checkpoint, train, TrainConfig};
use kogner::eval::{evaluate, DEFAULT_THRESHOLD};
use kogner::fixture::{split_entries, toy_world};
use kogner::numeric::GradCheckConfig;
use kogner::teacher::transr::{filtered_hits_at, train_transr};
use kogner::teacher::{
    build_teacher, encode_descriptions, pretrain_gnn, DescriptionEncoder, KnowledgeGraph, TeacherConfig,
    TeacherEmbedding,
};
use kogner::{Error, Result};

#[derive(Parser)]
#[command(name = "kogner", version, about = "Span-based NER with knowledge-graph distillation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file for the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GraphFiles {
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    /// Field delimiter of the node and edge files.
    #[arg(long, default_value_t = '\t')]
    delimiter: char,
}

impl GraphFiles {
    fn load(&self) -> Result<KnowledgeGraph> {
        KnowledgeGraph::load(&self.nodes, &self.edges, delimiter(self.delimiter)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sentence corpus from relation rows, or the built-in toy world.
    GenData {
        /// Relation rows; without it the toy world is written.
        #[arg(long, requires = "templates")]
        rows: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        #[command(flatten)]
        common: Common,
    },
    /// Validate a dataset file.
    CheckData {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Pretrain the node classifier and report its accuracy.
    PretrainGnn {
        #[command(flatten)]
        graph: GraphFiles,
        #[command(flatten)]
        common: Common,
    },
    /// Train TransR and report filtered hits@10 over the known triples.
    PretrainTransr {
        #[command(flatten)]
        graph: GraphFiles,
        #[command(flatten)]
        common: Common,
    },
    /// Build and save the teacher embedding.
    BuildTeacher {
        #[command(flatten)]
        graph: GraphFiles,
        #[command(flatten)]
        common: Common,
    },
    /// Train the student against a saved teacher.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        teacher: PathBuf,
        /// Weight both losses by 1.
        #[arg(long)]
        unit_weights: bool,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint and print metrics as JSON.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated entity types; defaults to the checkpoint's training types.
        #[arg(long)]
        types: Option<String>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of every training objective at toy sizes.
    GradCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn delimiter(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Config(format!("delimiter {c:?} is not a single ASCII character")))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenConfig {
    /// Keep each relation row with probability `1 / rate`.
    rate: u64,
    /// Held-out share written to `test.jsonl`.
    test_fraction: f64,
    seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            rate: 1,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

fn gen_data(rows: Option<&Path>, templates: Option<&Path>, delim: char, common: &Common) -> Result<serde_json::Value> {
    let mut cfg: GenConfig = load_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(&common.out)?;
    let entries = match (rows, templates) {
        (Some(rows), Some(templates)) => {
            let templates = TemplateSet::load(templates)?;
            let rows = subsample_rows(read_relation_rows(rows, delimiter(delim)?)?, cfg.rate, cfg.seed)?;
            let mut out = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let g = generate_entry(row, &templates, cfg.seed.wrapping_add(i as u64))?;
                if g.ambiguous {
                    log::warn!("row {i}: head and tail overlap; skipped");
                } else {
                    out.push(g.entry);
                }
            }
            out
        }
        _ => {
            let world = toy_world();
            world.kg.save(&common.out.join("nodes.tsv"), &common.out.join("edges.tsv"), b'\t')?;
            world.templates.save(&common.out.join("templates.json"))?;
            write_relation_rows(&common.out.join("rows.csv"), &world.rows, b',')?;
            world.sentences()?
        }
    };
    if entries.is_empty() {
        return Err(Error::EmptyInput("no sentences were generated".into()));
    }
    let (train_set, test_set) = split_entries(&entries, cfg.test_fraction, cfg.seed)?;
    write_dataset(&entries, &common.out.join("dataset.jsonl"))?;
    write_dataset(&train_set, &common.out.join("train.jsonl"))?;
    write_dataset(&test_set, &common.out.join("test.jsonl"))?;
    Ok(json!({
        "sentences": entries.len(),
        "train": train_set.len(),
        "test": test_set.len(),
        "out": common.out,
    }))
}

fn check_data(input: &Path) -> Result<serde_json::Value> {
    let scan = scan_dataset(input)?;
    for p in &scan.problems {
        eprintln!("{p}");
    }
    println!("{} entries, {} errors", scan.entries.len(), scan.problems.len());
    match scan.problems.into_iter().next() {
        Some(first) => Err(first),
        None => Ok(json!(null)),
    }
}

fn teacher_config(common: &Common) -> Result<TeacherConfig> {
    let mut cfg: TeacherConfig = load_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.gnn.init_seed = s;
        cfg.transr.seed = s;
    }
    Ok(cfg)
}

fn pretrain_gnn_cmd(graph: &GraphFiles, common: &Common) -> Result<serde_json::Value> {
    let cfg = teacher_config(common)?;
    let kg = graph.load()?;
    let encoder = DescriptionEncoder::seeded(&kg, cfg.kg_hidden, cfg.seed);
    let features = encode_descriptions(&kg, &encoder)?;
    let gnn = pretrain_gnn(&features, &kg.undirected_pairs(), &cfg.gnn)?;
    let report = serde_json::to_value(&gnn.report)?;
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("gnn_report.json"), &report)?;
    Ok(json!({
        "train_accuracy": gnn.report.train_accuracy,
        "val_accuracy": gnn.report.val_accuracy,
        "train_nodes": gnn.report.train_nodes,
        "val_nodes": gnn.report.val_nodes,
    }))
}

fn pretrain_transr_cmd(graph: &GraphFiles, common: &Common) -> Result<serde_json::Value> {
    let cfg = teacher_config(common)?;
    let kg = graph.load()?;
    let transr_cfg = kogner::teacher::transr::TransRConfig {
        dim: cfg.relational_dim.unwrap_or(cfg.kg_hidden),
        ..cfg.transr
    };
    let out = train_transr(&kg, &transr_cfg)?;
    let hits = filtered_hits_at(10, kg.edges(), &out.params, &kg.triple_set());
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("transr_losses.json"), &json!(out.epoch_losses))?;
    Ok(json!({
        "hits_at_10": hits,
        "triples": kg.edges().len(),
        "initial_loss": out.epoch_losses.first(),
        "final_loss": out.epoch_losses.last(),
    }))
}

fn build_teacher_cmd(graph: &GraphFiles, common: &Common) -> Result<serde_json::Value> {
    let cfg = teacher_config(common)?;
    let kg = graph.load()?;
    let built = build_teacher(&kg, &cfg)?;
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join("teacher.bin");
    built.embedding.save(&path)?;
    Ok(json!({
        "teacher": path,
        "nodes": built.embedding.num_nodes(),
        "width": built.embedding.width(),
        "gnn_val_accuracy": built.gnn.report.val_accuracy,
        "transr_final_loss": built.transr_losses.last(),
    }))
}

fn train_cmd(
    data: &Path,
    teacher: &Path,
    unit_weights: bool,
    steps: Option<usize>,
    common: &Common,
) -> Result<serde_json::Value> {
    let mut cfg = match &common.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg = cfg.with_seed(s);
    }
    if unit_weights {
        cfg = cfg.unit_weights();
    }
    if let Some(n) = steps {
        cfg.steps = n;
    }
    let entries = read_dataset(data)?;
    let (kept, excluded) = training_subset(&entries, cfg.max_span_width);
    if !excluded.is_empty() {
        log::warn!("{} of {} entries excluded from training", excluded.len(), entries.len());
    }
    let teacher = TeacherEmbedding::load(teacher)?;
    let out = train(&kept, &teacher, &cfg, Some(&common.out))?;
    out.report.write_tsv(&common.out.join("train_log.tsv"))?;
    cfg.save(&common.out.join("run_config.json"))?;
    let summary = out.report.summary();
    write_json(&common.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn eval_cmd(checkpoint: &Path, data: &Path, types: Option<&str>, threshold: f64, common: &Common) -> Result<serde_json::Value> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold {threshold} outside (0, 1)")));
    }
    let ck = load_checkpoint(checkpoint)?;
    let types: Vec<String> = match types {
        Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        None => ck.types.clone(),
    };
    if types.is_empty() {
        return Err(Error::Config("no entity types to evaluate".into()));
    }
    let entries: Vec<DatasetEntry> = read_dataset_lenient(data)?;
    let eval = evaluate(&ck.model, &entries, &types, threshold)?;
    std::fs::create_dir_all(&common.out)?;
    let preds: Vec<String> = eval
        .predictions
        .iter()
        .map(serde_json::to_string)
        .collect::<std::result::Result<_, _>>()?;
    std::fs::write(common.out.join("predictions.jsonl"), preds.join("\n") + "\n")?;
    for (i, why) in &eval.skipped {
        log::warn!("entry {i} skipped: {why}");
    }
    Ok(serde_json::to_value(&eval.metrics)?)
}

/// Keeps parseable lines; invalid entries are skipped later by evaluation.
fn read_dataset_lenient(path: &Path) -> Result<Vec<DatasetEntry>> {
    let scan = scan_dataset(path)?;
    if let Some(parse) = scan.problems.into_iter().find(|p| matches!(p, Error::Parse { .. })) {
        return Err(parse);
    }
    Ok(scan.entries)
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CheckConfig {
    eps: f64,
    samples: usize,
    tolerance: f64,
    seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        let d = GradCheckConfig::default();
        Self {
            eps: d.eps,
            samples: d.samples,
            tolerance: 1e-4,
            seed: d.seed,
        }
    }
}

fn grad_check_cmd(common: &Common) -> Result<serde_json::Value> {
    let mut cfg: CheckConfig = load_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let checks = gradient_suite(GradCheckConfig {
        eps: cfg.eps,
        samples: cfg.samples,
        seed: cfg.seed,
    })?;
    let rows: Vec<serde_json::Value> = checks
        .iter()
        .map(|c| {
            json!({
                "objective": c.name,
                "max_rel_error": c.report.max_rel_error,
                "coordinates": c.report.coordinates_checked,
                "worst": c.report.worst,
                "pass": c.report.max_rel_error < cfg.tolerance,
            })
        })
        .collect();
    if let Some(bad) = checks.iter().find(|c| c.report.max_rel_error >= cfg.tolerance) {
        print_json(&json!(rows))?;
        return Err(Error::GradientMismatch(format!(
            "{} off by {:.3e} (tolerance {:.0e})",
            bad.name, bad.report.max_rel_error, cfg.tolerance
        )));
    }
    Ok(json!(rows))
}

fn run(cli: Cli) -> Result<()> {
    let value = match &cli.command {
        Command::GenData {
            rows,
            templates,
            delimiter,
            common,
        } => gen_data(rows.as_deref(), templates.as_deref(), *delimiter, common)?,
        Command::CheckData { input, .. } => check_data(input)?,
        Command::PretrainGnn { graph, common } => pretrain_gnn_cmd(graph, common)?,
        Command::PretrainTransr { graph, common } => pretrain_transr_cmd(graph, common)?,
        Command::BuildTeacher { graph, common } => build_teacher_cmd(graph, common)?,
        Command::Train {
            data,
            teacher,
            unit_weights,
            steps,
            common,
        } => train_cmd(data, teacher, *unit_weights, *steps, common)?,
        Command::Eval {
            checkpoint,
            data,
            types,
            threshold,
            common,
        } => eval_cmd(checkpoint, data, types.as_deref(), *threshold, common)?,
        Command::GradCheck { common } => grad_check_cmd(common)?,
    };
    if !value.is_null() {
        print_json(&value)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            eprint!("{rendered}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.class());
            ExitCode::from(if e.is_data_validation() { 3 } else { 1 })
        }
    }
}
