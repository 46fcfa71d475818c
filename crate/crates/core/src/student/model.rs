//! Token/type bi-encoder with span representations and sigmoid matching.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{tokenize_text, DatasetEntry, Vocab};
use crate::error::{Error, Result};
use crate::numeric::{glorot, uniform, Graph, Matrix, ParamId, ParamStore, SparseRows, Var};
use crate::student::{enumerate_spans, SpanIndexSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentConfig {
    /// `d`, also the hidden width of both feed-forward networks.
    pub hidden_size: usize,
    pub max_span_width: usize,
    pub dropout: f64,
    /// Width `r` of the teacher rows fed to the teacher-side head.
    pub teacher_width: usize,
    /// Shared output width `m` of the two distillation heads.
    pub distill_width: usize,
    pub seed: u64,
}

impl Default for StudentConfig {
    fn default() -> Self {
        Self {
            hidden_size: 64,
            max_span_width: 8,
            dropout: 0.4,
            teacher_width: 174,
            distill_width: 58,
            seed: 0,
        }
    }
}

impl StudentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.distill_width == 0 || self.teacher_width == 0 {
            return Err(Error::Config("student widths must be positive".into()));
        }
        if self.max_span_width == 0 {
            return Err(Error::Config("max span width must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Weight and bias of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

impl Dense {
    fn init(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            w: store.insert(format!("{name}.w"), glorot(fan_in, fan_out, rng))?,
            b: store.insert(format!("{name}.b"), Matrix::zeros(1, fan_out))?,
        })
    }

    fn find(store: &ParamStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        Ok(Self {
            w: lookup(store, &format!("{name}.w"), (fan_in, fan_out))?,
            b: lookup(store, &format!("{name}.b"), (1, fan_out))?,
        })
    }

    pub fn apply(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        g.linear(x, w, b)
    }
}

fn lookup(store: &ParamStore, name: &str, shape: (usize, usize)) -> Result<ParamId> {
    let id = store
        .id(name)
        .ok_or_else(|| Error::Integrity(format!("missing parameter {name}")))?;
    if store.value(id).shape() != shape {
        let (r, c) = store.value(id).shape();
        return Err(Error::Mismatch(format!(
            "parameter {name} is {r}x{c}, expected {}x{}",
            shape.0, shape.1
        )));
    }
    Ok(id)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentIds {
    pub embed: ParamId,
    pub type_in: Dense,
    pub type_out: Dense,
    pub span_in: Dense,
    pub span_out: Dense,
    pub head_span: Dense,
    pub head_teacher: Dense,
}

/// Everything the forward pass produced for a batch of sentences.
#[derive(Debug, Clone)]
pub struct Forward {
    pub spans: Vec<SpanIndexSet>,
    /// First raw-span row of each sentence in the stacked matrices.
    pub offsets: Vec<usize>,
    /// Stacked `Σ T·w × d` span representations.
    pub span_reps: Var,
    /// `B × d`
    pub type_reps: Var,
    /// Stacked `Σ T·w × B` scores.
    pub scores: Var,
}

impl Forward {
    pub fn rows(&self) -> usize {
        self.spans.iter().map(SpanIndexSet::len).sum()
    }
}

#[derive(Debug, Clone)]
pub struct StudentModel {
    vocab: Vocab,
    config: StudentConfig,
    store: ParamStore,
    ids: StudentIds,
}

/// Type names with duplicates removed, first occurrence kept.
pub fn dedup_types<S: AsRef<str>>(names: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        let n = n.as_ref().trim();
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

impl StudentModel {
    pub fn new(vocab: Vocab, config: StudentConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.hidden_size;
        let mut store = ParamStore::new();
        let embed = store.insert("student.embed", uniform(vocab.len(), d, (3.0 / d as f64).sqrt(), &mut rng))?;
        let ids = StudentIds {
            embed,
            type_in: Dense::init(&mut store, "student.type.in", d, d, &mut rng)?,
            type_out: Dense::init(&mut store, "student.type.out", d, d, &mut rng)?,
            span_in: Dense::init(&mut store, "student.span.in", 2 * d, d, &mut rng)?,
            span_out: Dense::init(&mut store, "student.span.out", d, d, &mut rng)?,
            head_span: Dense::init(&mut store, "distill.span", d, config.distill_width, &mut rng)?,
            head_teacher: Dense::init(&mut store, "distill.teacher", config.teacher_width, config.distill_width, &mut rng)?,
        };
        Ok(Self {
            vocab,
            config,
            store,
            ids,
        })
    }

    /// Rebuilds a model around existing parameters, checking every shape.
    pub fn from_parts(vocab: Vocab, config: StudentConfig, store: ParamStore) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_size;
        let ids = StudentIds {
            embed: lookup(&store, "student.embed", (vocab.len(), d))?,
            type_in: Dense::find(&store, "student.type.in", d, d)?,
            type_out: Dense::find(&store, "student.type.out", d, d)?,
            span_in: Dense::find(&store, "student.span.in", 2 * d, d)?,
            span_out: Dense::find(&store, "student.span.out", d, d)?,
            head_span: Dense::find(&store, "distill.span", d, config.distill_width)?,
            head_teacher: Dense::find(&store, "distill.teacher", config.teacher_width, config.distill_width)?,
        };
        Ok(Self {
            vocab,
            config,
            store,
            ids,
        })
    }

    /// Same vocabulary and configuration around another, shape-checked, store.
    pub fn with_store(&self, store: ParamStore) -> Result<Self> {
        Self::from_parts(self.vocab.clone(), self.config, store)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn config(&self) -> &StudentConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn ids(&self) -> &StudentIds {
        &self.ids
    }

    /// Token embeddings of the concatenated sentences, dropout in training.
    pub fn embed_tokens<S: AsRef<str>, R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        tokens: &[S],
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("cannot embed an empty token list".into()));
        }
        let table = g.param(&self.store, self.ids.embed);
        let x = g.gather_rows(table, self.vocab.ids(tokens))?;
        g.dropout(x, self.config.dropout, training, rng)
    }

    /// `B × d` type representations: mean token embedding of each name, then the type FFN.
    pub fn encode_types<S: AsRef<str>>(&self, g: &mut Graph, type_names: &[S]) -> Result<Var> {
        let names = dedup_types(type_names);
        if names.is_empty() {
            return Err(Error::EmptyInput("no entity types to encode".into()));
        }
        if names.len() != type_names.len() {
            return Err(Error::Config("entity type names must be distinct".into()));
        }
        let groups = names
            .iter()
            .map(|n| {
                let toks = tokenize_text(n);
                if toks.is_empty() {
                    return Err(Error::EmptyInput(format!("type name {n:?} has no tokens")));
                }
                Ok(self.vocab.ids(&toks))
            })
            .collect::<Result<Vec<_>>>()?;
        let pool = Rc::new(SparseRows::mean_pool(self.vocab.len(), &groups)?);
        let table = g.param(&self.store, self.ids.embed);
        let pooled = g.sparse_mix(table, pool)?;
        let h = self.ids.type_in.apply(g, &self.store, pooled)?;
        let h = g.relu(h);
        self.ids.type_out.apply(g, &self.store, h)
    }

    /// Span FFN over concatenated endpoint embeddings. `x` stacks the token rows
    /// of every sentence; `offsets[i]` is the first token row of sentence `i`.
    pub fn span_representations<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        x: Var,
        spans: &[SpanIndexSet],
        token_offsets: &[usize],
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for (set, &off) in spans.iter().zip(token_offsets) {
            for (p, q) in set.endpoints() {
                starts.push(off + p);
                ends.push(off + q);
            }
        }
        let xs = g.gather_rows(x, starts)?;
        let xe = g.gather_rows(x, ends)?;
        let cat = g.concat_cols(&[xs, xe])?;
        let h = self.ids.span_in.apply(g, &self.store, cat)?;
        let h = g.relu(h);
        let h = g.dropout(h, self.config.dropout, training, rng)?;
        self.ids.span_out.apply(g, &self.store, h)
    }

    /// `σ(S · N′ᵀ)`
    pub fn match_scores(&self, g: &mut Graph, span_reps: Var, type_reps: Var) -> Result<Var> {
        let logits = g.matmul_nt(span_reps, type_reps)?;
        Ok(g.sigmoid(logits))
    }

    /// Full forward pass over a batch of tokenised sentences.
    pub fn forward<S: AsRef<str>, T: AsRef<str>, R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        sentences: &[&[S]],
        type_names: &[T],
        training: bool,
        rng: &mut R,
    ) -> Result<Forward> {
        if sentences.is_empty() {
            return Err(Error::EmptyInput("empty batch".into()));
        }
        let mut all = Vec::new();
        let mut token_offsets = Vec::with_capacity(sentences.len());
        let mut spans = Vec::with_capacity(sentences.len());
        let mut offsets = Vec::with_capacity(sentences.len());
        let mut rows = 0;
        for s in sentences {
            token_offsets.push(all.len());
            let set = enumerate_spans(s.len(), self.config.max_span_width)?;
            offsets.push(rows);
            rows += set.len();
            spans.push(set);
            all.extend(s.iter().map(|t| t.as_ref()));
        }
        let x = self.embed_tokens(g, &all, training, rng)?;
        let span_reps = self.span_representations(g, x, &spans, &token_offsets, training, rng)?;
        let type_reps = self.encode_types(g, type_names)?;
        let scores = self.match_scores(g, span_reps, type_reps)?;
        Ok(Forward {
            spans,
            offsets,
            span_reps,
            type_reps,
            scores,
        })
    }

    /// Eval-mode scores for one sentence.
    pub fn score_sentence<S: AsRef<str>, T: AsRef<str>>(
        &self,
        tokens: &[S],
        type_names: &[T],
    ) -> Result<(SpanIndexSet, Matrix)> {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = self.forward(&mut g, &[tokens], type_names, false, &mut rng)?;
        let scores = g.value(f.scores).clone();
        Ok((f.spans.into_iter().next().expect("one sentence"), scores))
    }
}

/// Label and mask matrices for the stacked scores: label 1 at gold
/// `(span, type)` pairs, mask 1 on every valid span row.
pub fn language_targets<S: AsRef<str>>(
    entries: &[&DatasetEntry],
    forward: &Forward,
    type_names: &[S],
) -> Result<(Matrix, Matrix)> {
    let b = type_names.len();
    let rows = forward.rows();
    let mut labels = Matrix::zeros(rows, b);
    let mut mask = Matrix::zeros(rows, b);
    for ((entry, set), &off) in entries.iter().zip(&forward.spans).zip(&forward.offsets) {
        for (i, &valid) in set.valid_mask.iter().enumerate() {
            if valid {
                mask.row_mut(off + i).fill(1.0);
            }
        }
        for s in &entry.ner {
            let Some(pos) = set.position(s.start, s.end) else {
                continue;
            };
            if let Some(k) = type_names.iter().position(|t| t.as_ref() == s.label) {
                labels.set(off + pos, k, 1.0);
            }
        }
    }
    Ok((labels, mask))
}

/// Summed masked binary cross-entropy of the stacked scores.
pub fn language_loss(g: &mut Graph, forward: &Forward, labels: &Matrix, mask: &Matrix) -> Result<Var> {
    g.masked_bce(forward.scores, labels, mask)
}
