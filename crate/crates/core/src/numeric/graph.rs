//! Tape-style reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Graph`] records every operation as it is applied. Nodes are appended in
//! evaluation order, so walking the node list backwards is a valid reverse
//! topological order. Parameter leaves copy their value out of a
//! [`ParamStore`]; [`Graph::backward`] accumulates into that store's gradient
//! buffers. Constant leaves never receive gradients, which is how frozen
//! inputs (the distillation teacher, pooling matrices, labels) are expressed.

use std::rc::Rc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::matrix::{dot, shape_err};
use crate::numeric::{Matrix, ParamId, ParamStore};

/// Probability clamp used by [`Graph::masked_bce`] before taking logs.
pub const BCE_EPS: f64 = 1e-12;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Row-sparse linear map: output row `i` is `Σ weight · input[col]` over `rows[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub input_rows: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    /// Uniform mean over each index group.
    pub fn mean_pool(input_rows: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(groups.len());
        for g in groups {
            if g.is_empty() {
                return Err(Error::EmptyInput("mean_pool: empty group".into()));
            }
            if let Some(&bad) = g.iter().find(|&&i| i >= input_rows) {
                return Err(Error::Shape(format!(
                    "mean_pool: index {bad} outside {input_rows} rows"
                )));
            }
            let w = 1.0 / g.len() as f64;
            rows.push(g.iter().map(|&i| (i, w)).collect());
        }
        Ok(Self { input_rows, rows })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.input_rows {
            return Err(Error::Shape(format!(
                "sparse_mix: expects {} input rows, got {}x{}",
                self.input_rows,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(self.rows.len(), x.cols());
        for (i, row) in self.rows.iter().enumerate() {
            let o = out.row_mut(i);
            for &(j, w) in row {
                for (slot, &v) in o.iter_mut().zip(x.row(j)) {
                    *slot += w * v;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    MulConst(Var, Matrix),
    GatherRows(Var, Vec<usize>),
    SparseMix(Var, Rc<SparseRows>),
    ConcatCols(Vec<Var>),
    RowSqNorm(Var),
    Sum(Var),
    Mean(Var),
    MaskedBce {
        scores: Var,
        labels: Matrix,
        mask: Matrix,
    },
    Mse(Var, Var),
    SoftmaxXent {
        logits: Var,
        targets: Vec<(usize, usize)>,
        probs: Matrix,
    },
}

struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

/// Per-node gradients left over from a backward pass.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient with respect to a node, `None` when nothing flowed into it.
    pub fn wrt(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> Result<f64> {
        self.value(v).item()
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul_nt(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::MatMulNT(a, b), ng))
    }

    /// Adds a 1×c row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (xv, rv) = (self.value(x), self.value(row));
        if rv.rows() != 1 || rv.cols() != xv.cols() {
            return Err(shape_err("add_row", xv, rv));
        }
        let mut out = xv.clone();
        let r = rv.row(0).to_vec();
        for i in 0..out.rows() {
            for (o, b) in out.row_mut(i).iter_mut().zip(&r) {
                *o += b;
            }
        }
        let ng = self.ng(x) || self.ng(row);
        Ok(self.push(out, Op::AddRow(x, row), ng))
    }

    /// `x · w + bias`, the affine layer.
    pub fn linear(&mut self, x: Var, w: Var, bias: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, bias)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        av.ensure_same_shape(bv, "add")?;
        let mut out = av.clone();
        out.add_assign(bv)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        av.ensure_same_shape(bv, "sub")?;
        let values = av.values().iter().zip(bv.values()).map(|(x, y)| x - y).collect();
        let out = Matrix::from_vec(av.rows(), av.cols(), values)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::Sub(a, b), ng))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| v * c);
        let ng = self.ng(x);
        self.push(out, Op::Scale(x, c), ng)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x).map(|v| v + c);
        let ng = self.ng(x);
        self.push(out, Op::AddScalar(x), ng)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.max(0.0));
        let ng = self.ng(x);
        self.push(out, Op::Relu(x), ng)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = sigmoid(self.value(x));
        let ng = self.ng(x);
        self.push(out, Op::Sigmoid(x), ng)
    }

    /// Inverted dropout. Eval mode and `p == 0` return `x` itself.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        x: Var,
        p: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        check_dropout_rate(p)?;
        if !training || p == 0.0 {
            return Ok(x);
        }
        let (r, c) = self.shape(x);
        let mask = dropout_mask(r, c, p, rng);
        let xv = self.value(x);
        let values = xv.values().iter().zip(mask.values()).map(|(a, m)| a * m).collect();
        let out = Matrix::from_vec(r, c, values)?;
        let ng = self.ng(x);
        Ok(self.push(out, Op::MulConst(x, mask), ng))
    }

    pub fn gather_rows(&mut self, x: Var, indices: Vec<usize>) -> Result<Var> {
        let out = self.value(x).select_rows(&indices)?;
        let ng = self.ng(x);
        Ok(self.push(out, Op::GatherRows(x, indices), ng))
    }

    pub fn sparse_mix(&mut self, x: Var, mix: Rc<SparseRows>) -> Result<Var> {
        let out = mix.apply(self.value(x))?;
        let ng = self.ng(x);
        Ok(self.push(out, Op::SparseMix(x, mix), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&v| self.value(v)).collect();
        let out = Matrix::hconcat(&mats)?;
        let ng = parts.iter().any(|&v| self.ng(v));
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Squared L2 norm of each row, as an n×1 column.
    pub fn row_sq_norm(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let values = (0..xv.rows()).map(|i| dot(xv.row(i), xv.row(i))).collect();
        let out = Matrix::from_vec(xv.rows(), 1, values).expect("n×1");
        let ng = self.ng(x);
        self.push(out, Op::RowSqNorm(x), ng)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let out = Matrix::scalar(self.value(x).sum());
        let ng = self.ng(x);
        self.push(out, Op::Sum(x), ng)
    }

    /// Mean over all entries; an empty matrix has mean 0.
    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let m = if xv.is_empty() {
            0.0
        } else {
            xv.sum() / xv.len() as f64
        };
        let ng = self.ng(x);
        self.push(Matrix::scalar(m), Op::Mean(x), ng)
    }

    /// Summed binary cross-entropy over entries where `mask == 1`.
    ///
    /// Scores are clamped to `[BCE_EPS, 1 − BCE_EPS]` before the logarithm.
    pub fn masked_bce(&mut self, scores: Var, labels: &Matrix, mask: &Matrix) -> Result<Var> {
        let sv = self.value(scores);
        sv.ensure_same_shape(labels, "masked_bce labels")?;
        sv.ensure_same_shape(mask, "masked_bce mask")?;
        let loss = masked_bce_value(sv, labels, mask);
        let ng = self.ng(scores);
        Ok(self.push(
            Matrix::scalar(loss),
            Op::MaskedBce {
                scores,
                labels: labels.clone(),
                mask: mask.clone(),
            },
            ng,
        ))
    }

    /// Mean squared error over all entries; two empty inputs give 0.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let loss = mse(av, bv)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Matrix::scalar(loss), Op::Mse(a, b), ng))
    }

    /// Mean softmax cross-entropy over the `(row, class)` targets.
    pub fn softmax_xent(&mut self, logits: Var, targets: &[(usize, usize)]) -> Result<Var> {
        let lv = self.value(logits);
        let mut probs = Matrix::zeros(lv.rows(), lv.cols());
        for r in 0..lv.rows() {
            let row = lv.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
            for (p, v) in probs.row_mut(r).iter_mut().zip(row) {
                *p = (v - max).exp() / z;
            }
        }
        let mut loss = 0.0;
        for &(r, c) in targets {
            if r >= lv.rows() || c >= lv.cols() {
                return Err(Error::Shape(format!(
                    "softmax_xent: target ({r},{c}) outside {}x{}",
                    lv.rows(),
                    lv.cols()
                )));
            }
            loss -= probs.get(r, c).ln();
        }
        if !targets.is_empty() {
            loss /= targets.len() as f64;
        }
        let ng = self.ng(logits);
        Ok(self.push(
            Matrix::scalar(loss),
            Op::SoftmaxXent {
                logits,
                targets: targets.to_vec(),
                probs,
            },
            ng,
        ))
    }

    /// Back-propagates from a 1×1 node, accumulating parameter gradients into `store`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::Shape(format!(
                "backward: loss must be 1x1, got {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.needs_grad {
                self.propagate(node, &g, &mut grads, store)?;
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(
        &self,
        node: &Node,
        g: &Matrix,
        grads: &mut [Option<Matrix>],
        store: &mut ParamStore,
    ) -> Result<()> {
        let mut send = |v: Var, delta: Matrix| -> Result<()> {
            if !self.nodes[v.0].needs_grad {
                return Ok(());
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&delta),
                slot @ None => {
                    *slot = Some(delta);
                    Ok(())
                }
            }
        };
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => store.accumulate_grad(*id, g)?,
            Op::MatMul(a, b) => {
                if self.ng(*a) {
                    send(*a, g.matmul_nt(self.value(*b))?)?;
                }
                if self.ng(*b) {
                    send(*b, self.value(*a).matmul_tn(g)?)?;
                }
            }
            Op::MatMulNT(a, b) => {
                // out = a·bᵀ: da = g·b, db = gᵀ·a
                if self.ng(*a) {
                    send(*a, g.matmul(self.value(*b))?)?;
                }
                if self.ng(*b) {
                    send(*b, g.matmul_tn(self.value(*a))?)?;
                }
            }
            Op::AddRow(x, row) => {
                if self.ng(*row) {
                    let mut acc = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (a, v) in acc.row_mut(0).iter_mut().zip(g.row(i)) {
                            *a += v;
                        }
                    }
                    send(*row, acc)?;
                }
                send(*x, g.clone())?;
            }
            Op::Add(a, b) => {
                send(*a, g.clone())?;
                send(*b, g.clone())?;
            }
            Op::Sub(a, b) => {
                send(*a, g.clone())?;
                send(*b, g.map(|v| -v))?;
            }
            Op::Scale(x, c) => send(*x, g.map(|v| v * c))?,
            Op::AddScalar(x) => send(*x, g.clone())?,
            Op::Relu(x) => {
                let xv = self.value(*x);
                send(*x, zip_map(g, xv, |gi, xi| if xi > 0.0 { gi } else { 0.0 }))?;
            }
            Op::Sigmoid(x) => {
                send(*x, zip_map(g, &node.value, |gi, s| gi * s * (1.0 - s)))?;
            }
            Op::MulConst(x, m) => send(*x, zip_map(g, m, |gi, mi| gi * mi))?,
            Op::GatherRows(x, indices) => {
                let (r, c) = self.shape(*x);
                let mut acc = Matrix::zeros(r, c);
                for (i, &src) in indices.iter().enumerate() {
                    for (a, v) in acc.row_mut(src).iter_mut().zip(g.row(i)) {
                        *a += v;
                    }
                }
                send(*x, acc)?;
            }
            Op::SparseMix(x, mix) => {
                let (r, c) = self.shape(*x);
                let mut acc = Matrix::zeros(r, c);
                for (i, row) in mix.rows.iter().enumerate() {
                    for &(j, w) in row {
                        for (a, v) in acc.row_mut(j).iter_mut().zip(g.row(i)) {
                            *a += w * v;
                        }
                    }
                }
                send(*x, acc)?;
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    if self.ng(p) {
                        send(p, g.columns(offset, offset + w)?)?;
                    }
                    offset += w;
                }
            }
            Op::RowSqNorm(x) => {
                let xv = self.value(*x);
                let mut d = xv.map(|v| 2.0 * v);
                for i in 0..d.rows() {
                    let gi = g.get(i, 0);
                    d.row_mut(i).iter_mut().for_each(|v| *v *= gi);
                }
                send(*x, d)?;
            }
            Op::Sum(x) => {
                let (r, c) = self.shape(*x);
                send(*x, Matrix::filled(r, c, g.item()?))?;
            }
            Op::Mean(x) => {
                let (r, c) = self.shape(*x);
                if r * c > 0 {
                    send(*x, Matrix::filled(r, c, g.item()? / (r * c) as f64))?;
                }
            }
            Op::MaskedBce {
                scores,
                labels,
                mask,
            } => {
                let gs = g.item()?;
                let sv = self.value(*scores);
                let mut d = Matrix::zeros(sv.rows(), sv.cols());
                for (k, slot) in d.values_mut().iter_mut().enumerate() {
                    if mask.values()[k] == 0.0 {
                        continue;
                    }
                    let s = sv.values()[k].clamp(BCE_EPS, 1.0 - BCE_EPS);
                    let y = labels.values()[k];
                    *slot = gs * (-y / s + (1.0 - y) / (1.0 - s));
                }
                send(*scores, d)?;
            }
            Op::Mse(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let n = av.len();
                if n > 0 {
                    let k = 2.0 * g.item()? / n as f64;
                    let d = zip_map(av, bv, |x, y| k * (x - y));
                    if self.ng(*b) {
                        send(*b, d.map(|v| -v))?;
                    }
                    send(*a, d)?;
                }
            }
            Op::SoftmaxXent {
                logits,
                targets,
                probs,
            } => {
                if !targets.is_empty() {
                    let k = g.item()? / targets.len() as f64;
                    let mut d = Matrix::zeros(probs.rows(), probs.cols());
                    for &(r, c) in targets {
                        for (slot, &p) in d.row_mut(r).iter_mut().zip(probs.row(r)) {
                            *slot += k * p;
                        }
                        let cur = d.get(r, c);
                        d.set(r, c, cur - k);
                    }
                    send(*logits, d)?;
                }
            }
        }
        Ok(())
    }
}

fn zip_map(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let values = a.values().iter().zip(b.values()).map(|(&x, &y)| f(x, y)).collect();
    Matrix::from_vec(a.rows(), a.cols(), values).expect("same shape")
}

/// `x · w + bias`.
pub fn linear(x: &Matrix, w: &Matrix, bias: &Matrix) -> Result<Matrix> {
    let mut out = x.matmul(w)?;
    if bias.rows() != 1 || bias.cols() != out.cols() {
        return Err(shape_err("linear bias", &out, bias));
    }
    for i in 0..out.rows() {
        for (o, b) in out.row_mut(i).iter_mut().zip(bias.row(0)) {
            *o += b;
        }
    }
    Ok(out)
}

const SIGMOID_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Scalar logistic function, kept strictly inside (0, 1).
pub fn sigmoid_scalar(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_CEIL)
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

pub fn masked_bce_value(scores: &Matrix, labels: &Matrix, mask: &Matrix) -> f64 {
    let mut loss = 0.0;
    for ((&s, &y), &m) in scores.values().iter().zip(labels.values()).zip(mask.values()) {
        if m == 0.0 {
            continue;
        }
        let s = s.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
    }
    loss
}

/// Mean of `(a − b)²`; empty inputs give 0.
pub fn mse(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(b, "mse")?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let ss: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(ss / a.len() as f64)
}

fn check_dropout_rate(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("dropout rate {p} outside [0, 1)")));
    }
    Ok(())
}

fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Matrix {
    let keep = 1.0 / (1.0 - p);
    let values = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    Matrix::from_vec(rows, cols, values).expect("mask shape")
}

/// Inverted dropout on a plain matrix, seeded.
pub fn dropout(x: &Matrix, p: f64, training: bool, seed: u64) -> Result<Matrix> {
    use rand::SeedableRng;
    check_dropout_rate(p)?;
    if !training || p == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mask = dropout_mask(x.rows(), x.cols(), p, &mut rng);
    Ok(zip_map(x, &mask, |a, m| a * m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn linear_identity_and_basis_rows() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let out = linear(&x, &Matrix::identity(2), &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0]);

        let x = Matrix::identity(2);
        let w = Matrix::from_rows(&[[3.0], [5.0]]).unwrap();
        let out = linear(&x, &w, &Matrix::scalar(1.0)).unwrap();
        assert_eq!(out.values(), &[4.0, 6.0]);
    }

    #[test]
    fn linear_matches_triple_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut rand_m = |r, c| {
            Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-2.0..2.0)).collect())
                .unwrap()
        };
        let (x, w, b) = (rand_m(3, 4), rand_m(4, 2), rand_m(1, 2));
        let got = linear(&x, &w, &b).unwrap();
        let mut want = naive_matmul(&x, &w);
        for i in 0..3 {
            for j in 0..2 {
                want.set(i, j, want.get(i, j) + b.get(0, j));
            }
        }
        for (g, w) in got.values().iter().zip(want.values()) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_shape_error_names_both_shapes() {
        let err = linear(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2), &Matrix::zeros(1, 2))
            .unwrap_err()
            .to_string();
        assert!(err.contains("2x3") && err.contains("2x2"), "{err}");
    }

    #[test]
    fn sigmoid_values_and_saturation() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let hi = sigmoid_scalar(40.0);
        assert!(hi > 1.0 - 1e-15 && hi < 1.0);
        let lo = sigmoid_scalar(-40.0);
        assert!(lo > 0.0 && lo < 1e-15);
        assert!((sigmoid_scalar(1.0) - 0.7310585786).abs() < 1e-9);
        let extreme = sigmoid_scalar(-1e4);
        assert!(extreme > 0.0);
    }

    #[test]
    fn bce_reference_values() {
        let half = Matrix::filled(1, 1, 0.5);
        let one = Matrix::filled(1, 1, 1.0);
        assert!((masked_bce_value(&half, &one, &one) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(masked_bce_value(&half, &one, &Matrix::zeros(1, 1)), 0.0);

        let scores = Matrix::filled(2, 2, 0.5);
        let labels = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let mask = Matrix::filled(2, 2, 1.0);
        assert!((masked_bce_value(&scores, &labels, &mask) - 4.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bce_clamps_saturated_scores() {
        let s = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let y = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let loss = masked_bce_value(&s, &y, &Matrix::filled(1, 2, 1.0));
        assert!(loss.is_finite());
        let upper = 1.0 - BCE_EPS;
        let want = -BCE_EPS.ln() - (1.0 - upper).ln();
        assert!((loss - want).abs() < 1e-12);
    }

    #[test]
    fn mse_reference_values() {
        let z = Matrix::zeros(1, 2);
        assert_eq!(mse(&z, &z).unwrap(), 0.0);
        assert_eq!(mse(&Matrix::filled(1, 2, 1.0), &z).unwrap(), 1.0);
        assert_eq!(mse(&Matrix::from_rows(&[[2.0, 0.0]]).unwrap(), &z).unwrap(), 2.0);
        assert!(mse(&z, &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn dropout_contracts() {
        let x = Matrix::filled(100, 100, 1.0);
        assert_eq!(dropout(&x, 0.4, false, 1).unwrap(), x);
        assert_eq!(dropout(&x, 0.0, true, 1).unwrap(), x);
        assert!(dropout(&x, 1.0, true, 1).is_err());
        assert!(dropout(&x, -0.1, true, 1).is_err());

        let y = dropout(&x, 0.4, true, 9).unwrap();
        let dropped = y.values().iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
        assert!((dropped - 0.4).abs() < 0.02, "drop fraction {dropped}");
        for &v in y.values() {
            assert!(v == 0.0 || (v - 1.0 / 0.6).abs() < 1e-12);
        }
        assert_eq!(y, dropout(&x, 0.4, true, 9).unwrap());
    }

    #[test]
    fn constants_block_gradient() {
        let mut store = ParamStore::new();
        let id = store.insert("a", Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        let mut g = Graph::new();
        let a = g.param(&store, id);
        let t = g.constant(Matrix::from_rows(&[[0.0, 1.0]]).unwrap());
        let loss = g.mse(a, t).unwrap();
        let grads = g.backward(loss, &mut store).unwrap();
        assert!(grads.wrt(t).is_none());
        assert_eq!(store.grad(id).values(), &[1.0, 1.0]);
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut store = ParamStore::new();
        let id = store.insert("a", Matrix::zeros(2, 2)).unwrap();
        let mut g = Graph::new();
        let a = g.param(&store, id);
        assert!(g.backward(a, &mut store).is_err());
    }
}
