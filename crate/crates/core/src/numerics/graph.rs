//! Reverse-mode differentiation over a per-example computation graph.
//!
//! A [`Graph`] evaluates eagerly: every op computes its value on creation and
//! records its inputs. [`Graph::backward`] walks the records in reverse and
//! accumulates parameter gradients into a fresh [`Gradients`]. Graphs borrow
//! the parameter store immutably, so several graphs can run in parallel over
//! one model.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{dot, layer_norm_row, masked_softmax_in_place, Tensor};
use super::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Tensor,
        inv_std: Vec<f64>,
    },
    Dropout {
        x: Var,
        keep: Vec<f64>,
    },
    Gather {
        table: Var,
        idx: Vec<usize>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows {
        x: Var,
        start: usize,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    PairDot {
        q: Var,
        rk: Var,
    },
    LogSumExpRows(Var),
    Sum(Var),
    /// Scalar function with gradients computed during the forward pass.
    ScalarFn {
        inputs: Vec<Var>,
        local_grads: Vec<Tensor>,
    },
}

struct Node {
    // None for parameters, which are read from the store
    value: Option<Tensor>,
    op: Op,
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
    dropout_rng: Option<ChaCha8Rng>,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

impl<'p> Graph<'p> {
    /// Evaluation graph: dropout is the identity.
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_vars: HashMap::new(),
            dropout_rng: None,
        }
    }

    /// Training graph: dropout draws from `rng`.
    pub fn training(params: &'p ParamStore, rng: ChaCha8Rng) -> Self {
        let mut g = Graph::new(params);
        g.dropout_rng = Some(rng);
        g
    }

    pub fn is_training(&self) -> bool {
        self.dropout_rng.is_some()
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.value(*id),
            (None, _) => unreachable!("only parameter nodes are stored by reference"),
        }
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols() != tb.rows() {
            return Err(shape_err("matmul", ta, tb));
        }
        let out = ta.matmul(tb);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `a * b^T`.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols() != tb.cols() {
            return Err(shape_err("matmul_bt", ta, tb));
        }
        let out = ta.matmul_bt(tb);
        Ok(self.push(out, Op::MatMulBt(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(shape_err("add", ta, tb));
        }
        let mut out = ta.clone();
        out.add_assign(tb);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds the `1 x n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if tb.rows() != 1 || tb.cols() != ta.cols() {
            return Err(shape_err("add_row", ta, tb));
        }
        let mut out = ta.clone();
        let bias = tb.row(0);
        for r in 0..out.rows() {
            for (x, b) in out.row_mut(r).iter_mut().zip(bias) {
                *x += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let mut out = self.value(a).clone();
        out.scale(s);
        self.push(out, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    /// Row-wise softmax. `mask`, when given, is row-major and marks the
    /// entries allowed to receive weight; the rest get exactly zero, and a
    /// row with no allowed entry is all zeros.
    pub fn softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let tx = self.value(x);
        if let Some(m) = mask {
            if m.len() != tx.len() {
                return Err(Error::ShapeMismatch {
                    op: "softmax_rows",
                    left: tx.shape().to_vec(),
                    right: vec![m.len()],
                });
            }
        }
        let mut out = tx.clone();
        let cols = out.cols();
        for r in 0..out.rows() {
            let allowed = mask.map(|m| &m[r * cols..(r + 1) * cols]);
            masked_softmax_in_place(out.row_mut(r), allowed);
        }
        Ok(self.push(out, Op::Softmax(x)))
    }

    /// Per-row normalization to zero mean and unit variance, then `* gain + bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let (tx, tg, tb) = (self.value(x), self.value(gain), self.value(bias));
        let d = tx.cols();
        if tg.rows() != 1 || tg.cols() != d {
            return Err(shape_err("layer_norm", tx, tg));
        }
        if tb.rows() != 1 || tb.cols() != d {
            return Err(shape_err("layer_norm", tx, tb));
        }
        let mut xhat = Tensor::zeros(tx.rows(), d);
        let mut out = Tensor::zeros(tx.rows(), d);
        let mut inv_std = Vec::with_capacity(tx.rows());
        for r in 0..tx.rows() {
            inv_std.push(layer_norm_row(
                tx.row(r),
                tg.row(0),
                tb.row(0),
                eps,
                xhat.row_mut(r),
                out.row_mut(r),
            ));
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
        ))
    }

    /// Inverted dropout; the identity in evaluation graphs or when `p == 0`.
    pub fn dropout(&mut self, x: Var, p: f64) -> Var {
        if p <= 0.0 || self.dropout_rng.is_none() {
            return x;
        }
        let n = self.value(x).len();
        let rng = self.dropout_rng.as_mut().expect("checked above");
        let scale = 1.0 / (1.0 - p);
        let keep: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { scale })
            .collect();
        let mut out = self.value(x).clone();
        for (v, k) in out.data_mut().iter_mut().zip(&keep) {
            *v *= k;
        }
        self.push(out, Op::Dropout { x, keep })
    }

    /// Rows of `table` selected by `idx` (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, idx: Vec<usize>) -> Result<Var> {
        let tt = self.value(table);
        let mut out = Tensor::zeros(idx.len(), tt.cols());
        for (r, &i) in idx.iter().enumerate() {
            if i >= tt.rows() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: tt.rows(),
                });
            }
            out.row_mut(r).copy_from_slice(tt.row(i));
        }
        Ok(self.push(out, Op::Gather { table, idx }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            if t.rows() != rows {
                return Err(shape_err("concat_cols", self.value(parts[0]), t));
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let t = self.value(p);
                out.row_mut(r)[off..off + t.cols()].copy_from_slice(t.row(r));
                off += t.cols();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(shape_err("concat_rows", self.value(parts[0]), t));
            }
            data.extend_from_slice(t.data());
            rows += t.rows();
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let tx = self.value(x);
        if start > end || end > tx.rows() {
            return Err(Error::IndexOutOfRange {
                index: end,
                len: tx.rows(),
            });
        }
        let out = tx.slice_rows(start, end);
        Ok(self.push(out, Op::SliceRows { x, start }))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let tx = self.value(x);
        if start > end || end > tx.cols() {
            return Err(Error::IndexOutOfRange {
                index: end,
                len: tx.cols(),
            });
        }
        let out = tx.slice_cols(start, end);
        Ok(self.push(out, Op::SliceCols { x, start }))
    }

    /// `out[i][j] = q[i] . rk[i * S + j]` for `q: S x d`, `rk: (S*S) x d`.
    pub fn pair_dot(&mut self, q: Var, rk: Var) -> Result<Var> {
        let (tq, trk) = (self.value(q), self.value(rk));
        let s = tq.rows();
        if trk.rows() != s * s || trk.cols() != tq.cols() {
            return Err(shape_err("pair_dot", tq, trk));
        }
        let mut out = Tensor::zeros(s, s);
        for i in 0..s {
            let qi = tq.row(i);
            for j in 0..s {
                out.set(i, j, dot(qi, trk.row(i * s + j)));
            }
        }
        Ok(self.push(out, Op::PairDot { q, rk }))
    }

    /// `m x n -> m x 1` row-wise log-sum-exp.
    pub fn log_sum_exp_rows(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let data = (0..tx.rows())
            .map(|r| super::tensor::log_sum_exp(tx.row(r)))
            .collect();
        let out = Tensor::from_vec(tx.rows(), 1, data).expect("one value per row");
        self.push(out, Op::LogSumExpRows(x))
    }

    /// Sum of all entries as a `1 x 1` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor::row_vector(vec![s]), Op::Sum(x))
    }

    /// Records a scalar computed outside the graph together with its
    /// gradients with respect to `inputs`.
    pub fn scalar_fn(&mut self, inputs: &[Var], value: f64, local_grads: Vec<Tensor>) -> Result<Var> {
        if inputs.len() != local_grads.len() {
            return Err(Error::Structural(format!(
                "scalar_fn: {} inputs but {} gradients",
                inputs.len(),
                local_grads.len()
            )));
        }
        for (&v, g) in inputs.iter().zip(&local_grads) {
            if !self.value(v).same_shape(g) {
                return Err(shape_err("scalar_fn", self.value(v), g));
            }
        }
        Ok(self.push(
            Tensor::row_vector(vec![value]),
            Op::ScalarFn {
                inputs: inputs.to_vec(),
                local_grads,
            },
        ))
    }

    /// Gradients of the `1 x 1` node `loss` with respect to every parameter
    /// that is not frozen.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "backward",
                left: vec![1, 1],
                right: lv.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(lv.rows(), lv.cols(), 1.0));
        let mut out = Gradients::new(self.params.len());

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Param(id) => {
                    if !self.params.get(*id).frozen {
                        out.accumulate_owned(*id, g);
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_bt(self.value(*b));
                    let gb = self.value(*a).matmul_at(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulBt(a, b) => {
                    // out = a b^T: da = g b, db = g^T a
                    let ga = g.matmul(self.value(*b));
                    let gb = g.matmul_at(self.value(*a));
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g);
                }
                Op::AddRow(a, b) => {
                    let mut gb = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (s, v) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                            *s += v;
                        }
                    }
                    acc(&mut grads, *b, gb);
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, s) => {
                    let mut ga = g;
                    ga.scale(*s);
                    acc(&mut grads, *a, ga);
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut ga = g;
                    for (gv, &xv) in ga.data_mut().iter_mut().zip(x.data()) {
                        if xv <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Softmax(x) => {
                    let y = self.value(Var(idx));
                    let mut gx = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let inner = dot(yr, gr);
                        for (k, o) in gx.row_mut(r).iter_mut().enumerate() {
                            *o = yr[k] * (gr[k] - inner);
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    xhat,
                    inv_std,
                } => {
                    let tg = self.value(*gain);
                    let d = xhat.cols();
                    let mut gx = Tensor::zeros(xhat.rows(), d);
                    let mut ggain = Tensor::zeros(1, d);
                    let mut gbias = Tensor::zeros(1, d);
                    let mut dxhat = vec![0.0; d];
                    for (r, &istd) in inv_std.iter().enumerate() {
                        let (gr, xh) = (g.row(r), xhat.row(r));
                        for k in 0..d {
                            dxhat[k] = gr[k] * tg.row(0)[k];
                            ggain.row_mut(0)[k] += gr[k] * xh[k];
                            gbias.row_mut(0)[k] += gr[k];
                        }
                        let sum_d: f64 = dxhat.iter().sum();
                        let sum_dx: f64 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum();
                        let scale = istd / d as f64;
                        for (k, o) in gx.row_mut(r).iter_mut().enumerate() {
                            *o = scale * (d as f64 * dxhat[k] - sum_d - xh[k] * sum_dx);
                        }
                    }
                    acc(&mut grads, *gain, ggain);
                    acc(&mut grads, *bias, gbias);
                    acc(&mut grads, *x, gx);
                }
                Op::Dropout { x, keep } => {
                    let mut gx = g;
                    for (v, k) in gx.data_mut().iter_mut().zip(keep) {
                        *v *= k;
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Gather { table, idx } => {
                    let tt = self.value(*table);
                    let mut gt = Tensor::zeros(tt.rows(), tt.cols());
                    for (r, &i) in idx.iter().enumerate() {
                        for (o, v) in gt.row_mut(i).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    acc(&mut grads, *table, gt);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        acc(&mut grads, p, g.slice_cols(off, off + w));
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let h = self.value(p).rows();
                        acc(&mut grads, p, g.slice_rows(off, off + h));
                        off += h;
                    }
                }
                Op::SliceRows { x, start } => {
                    let tx = self.value(*x);
                    let mut gx = Tensor::zeros(tx.rows(), tx.cols());
                    let c = tx.cols();
                    gx.data_mut()[start * c..(start + g.rows()) * c].copy_from_slice(g.data());
                    acc(&mut grads, *x, gx);
                }
                Op::SliceCols { x, start } => {
                    let tx = self.value(*x);
                    let mut gx = Tensor::zeros(tx.rows(), tx.cols());
                    for r in 0..g.rows() {
                        gx.row_mut(r)[*start..start + g.cols()].copy_from_slice(g.row(r));
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::PairDot { q, rk } => {
                    let (tq, trk) = (self.value(*q), self.value(*rk));
                    let s = tq.rows();
                    let mut gq = Tensor::zeros(s, tq.cols());
                    let mut grk = Tensor::zeros(trk.rows(), trk.cols());
                    for i in 0..s {
                        for j in 0..s {
                            let gij = g.get(i, j);
                            if gij == 0.0 {
                                continue;
                            }
                            let r = trk.row(i * s + j);
                            for (o, v) in gq.row_mut(i).iter_mut().zip(r) {
                                *o += gij * v;
                            }
                            for (o, v) in grk.row_mut(i * s + j).iter_mut().zip(tq.row(i)) {
                                *o += gij * v;
                            }
                        }
                    }
                    acc(&mut grads, *q, gq);
                    acc(&mut grads, *rk, grk);
                }
                Op::LogSumExpRows(x) => {
                    let tx = self.value(*x);
                    let lse = self.value(Var(idx));
                    let mut gx = Tensor::zeros(tx.rows(), tx.cols());
                    for r in 0..tx.rows() {
                        let (l, gr) = (lse.get(r, 0), g.get(r, 0));
                        for (o, v) in gx.row_mut(r).iter_mut().zip(tx.row(r)) {
                            *o = gr * (v - l).exp();
                        }
                    }
                    acc(&mut grads, *x, gx);
                }
                Op::Sum(x) => {
                    let tx = self.value(*x);
                    acc(&mut grads, *x, Tensor::filled(tx.rows(), tx.cols(), g.get(0, 0)));
                }
                Op::ScalarFn {
                    inputs,
                    local_grads,
                } => {
                    let up = g.get(0, 0);
                    for (&v, lg) in inputs.iter().zip(local_grads) {
                        let mut gv = lg.clone();
                        gv.scale(up);
                        acc(&mut grads, v, gv);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot => *slot = Some(g),
    }
}
