//! Tape-style reverse-mode differentiation over [`Tensor`]s.
//!
//! Every operation appends a node to the graph, so node order is already a
//! topological order and backward is a single reverse sweep. Parameter leaves
//! borrow their values from a [`ParameterSet`]; nothing is copied until an
//! operation produces a new tensor.

use std::borrow::Cow;
use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParamGrads, ParamId, ParameterSet};
use crate::tensor::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    /// ReLU uses 0 as its subgradient at 0.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-feature statistics of one training batch, used to update running
/// batch-norm statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Act(Var, Activation),
    Conv1d {
        seq: Var,
        filters: Var,
        bias: Var,
    },
    MaxOverTime {
        x: Var,
        argmax: Vec<usize>,
    },
    SoftmaxMasked {
        x: Var,
        mask: Vec<bool>,
    },
    SoftmaxRows(Var),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Row(Var, usize),
    Slice(Var, usize),
    Reshape(Var),
    Dropout {
        x: Var,
        scale: Vec<f64>,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch_coupled: bool,
    },
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    Sum(Var),
    Mean(Var),
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
        clamped: Vec<bool>,
    },
}

#[derive(Debug)]
struct Node<'p> {
    value: Cow<'p, Tensor>,
    op: Op,
    requires_grad: bool,
    param: Option<ParamId>,
    grad: Option<Vec<f64>>,
}

/// A computation graph. Parameter leaves borrow from the parameter set the
/// graph was created with.
#[derive(Debug)]
pub struct Graph<'p> {
    params: Option<&'p ParameterSet>,
    param_vars: HashMap<ParamId, Var>,
    nodes: Vec<Node<'p>>,
}

/// Lowest log-probability the loss will charge, i.e. probabilities are
/// clamped at 1e-12.
pub const MIN_LOG_PROB: f64 = -27.631021115928547; // ln(1e-12)

impl Default for Graph<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Self {
            params: None,
            param_vars: HashMap::new(),
            nodes: Vec::new(),
        }
    }

    pub fn with_params(params: &'p ParameterSet) -> Self {
        Self {
            params: Some(params),
            ..Self::new()
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a leaf, if backward has reached it.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        debug_assert!(value.is_finite() || inputs.iter().any(|v| !self.value(*v).is_finite()));
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
            requires_grad,
            param: None,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn leaf(&mut self, value: Cow<'p, Tensor>, requires_grad: bool, param: Option<ParamId>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            param,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that never receives gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(Cow::Owned(value), false, None)
    }

    /// A leaf whose gradient is accumulated by backward.
    pub fn input(&mut self, value: Tensor) -> Var {
        self.leaf(Cow::Owned(value), true, None)
    }

    /// Leaf for a named entry of the bound parameter set. Repeated calls
    /// return the same node. Non-trainable entries behave as constants.
    pub fn param(&mut self, name: &str) -> Result<Var> {
        let params = self
            .params
            .ok_or_else(|| Error::invalid("graph has no parameter set"))?;
        let id = params.id(name)?;
        Ok(self.param_by_id(id))
    }

    pub fn param_by_id(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let params = self.params.expect("graph has no parameter set");
        let v = self.leaf(
            Cow::Borrowed(params.value(id)),
            params.is_trainable(id),
            Some(id),
        );
        self.param_vars.insert(id, v);
        v
    }

    // ── Linear algebra ────────────────────────────────────────────────

    /// `A[m,k] · B[k,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        gemm_nn(m, k, n, self.value(a).data(), self.value(b).data(), &mut out);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), &[a, b]))
    }

    /// `A[m,k] · B[n,k]ᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[1] {
            return Err(shape_err("matmul_nt", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[0]);
        let mut out = vec![0.0; m * n];
        gemm_nt(m, k, n, self.value(a).data(), self.value(b).data(), &mut out);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMulNT(a, b), &[a, b]))
    }

    // ── Elementwise ───────────────────────────────────────────────────

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    /// Adds vector `row[n]` to every row of `a[m,n]`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sa.len() != 2 || sr.len() != 1 || sa[1] != sr[0] {
            return Err(shape_err("add_row", sa, sr));
        }
        let n = sa[1];
        let mut out = self.value(a).clone();
        let r = self.value(row).data();
        for chunk in out.data_mut().chunks_mut(n) {
            for (o, x) in chunk.iter_mut().zip(r) {
                *o += x;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row), &[a, row]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x *= k);
        self.push(out, Op::Scale(a, k), &[a])
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Var {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x = kind.apply(*x));
        self.push(out, Op::Act(a, kind), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Relu)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(a, Activation::Sigmoid)
    }

    // ── Convolution and pooling ───────────────────────────────────────

    /// Valid cross-correlation of `seq[T,d]` with `filters[w,d,F]` plus
    /// `bias[F]`, giving `[T-w+1, F]`.
    pub fn conv1d_valid(&mut self, seq: Var, filters: Var, bias: Var) -> Result<Var> {
        let (ss, sf, sb) = (self.shape(seq), self.shape(filters), self.shape(bias));
        if ss.len() != 2 || sf.len() != 3 || sf[1] != ss[1] {
            return Err(shape_err("conv1d_valid", ss, sf));
        }
        if sb.len() != 1 || sb[0] != sf[2] {
            return Err(shape_err("conv1d_valid bias", sf, sb));
        }
        let (t_len, d) = (ss[0], ss[1]);
        let (w, f) = (sf[0], sf[2]);
        if t_len < w {
            return Err(Error::SequenceTooShort {
                len: t_len,
                width: w,
            });
        }
        let out_len = t_len - w + 1;
        let x = self.value(seq).data();
        let k = self.value(filters).data();
        let b = self.value(bias).data();
        let mut out = Vec::with_capacity(out_len * f);
        for _ in 0..out_len {
            out.extend_from_slice(b);
        }
        for t in 0..out_len {
            let orow = &mut out[t * f..(t + 1) * f];
            for kk in 0..w {
                let xrow = &x[(t + kk) * d..(t + kk + 1) * d];
                for (c, &xv) in xrow.iter().enumerate() {
                    let krow = &k[(kk * d + c) * f..(kk * d + c + 1) * f];
                    for (o, kv) in orow.iter_mut().zip(krow) {
                        *o += xv * kv;
                    }
                }
            }
        }
        let out = Tensor::new(vec![out_len, f], out)?;
        Ok(self.push(out, Op::Conv1d { seq, filters, bias }, &[seq, filters, bias]))
    }

    /// Column-wise maximum of `x[T,F]`. Ties resolve to the lowest row.
    pub fn max_over_time(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 2 {
            return Err(shape_err("max_over_time", s, &[0, 0]));
        }
        let (t_len, f) = (s[0], s[1]);
        let xv = self.value(x);
        let mut best = xv.row(0).to_vec();
        let mut argmax = vec![0; f];
        for t in 1..t_len {
            for (j, &v) in xv.row(t).iter().enumerate() {
                if v > best[j] {
                    best[j] = v;
                    argmax[j] = t;
                }
            }
        }
        Ok(self.push(Tensor::vector(best), Op::MaxOverTime { x, argmax }, &[x]))
    }

    // ── Normalization ─────────────────────────────────────────────────

    /// Softmax over the positions where `mask` is true; masked positions get
    /// exactly zero. Max-subtracted for stability.
    pub fn softmax_masked(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 1 || s[0] != mask.len() {
            return Err(shape_err("softmax_masked", s, &[mask.len()]));
        }
        let out = masked_softmax(self.value(x).data(), mask)?;
        Ok(self.push(
            Tensor::vector(out),
            Op::SoftmaxMasked {
                x,
                mask: mask.to_vec(),
            },
            &[x],
        ))
    }

    /// Row-wise softmax of a `[B,C]` matrix.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return Err(shape_err("softmax_rows", &s, &[0, 0]));
        }
        let mut out = self.value(x).clone();
        for row in out.data_mut().chunks_mut(s[1]) {
            softmax_in_place(row);
        }
        Ok(self.push(out, Op::SoftmaxRows(x), &[x]))
    }

    /// Batch normalization over the rows of `x[B,F]` using batch statistics.
    pub fn batchnorm_train(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let s = self.shape(x).to_vec();
        self.check_affine("batchnorm_train", &s, gamma, beta)?;
        let (b, f) = (s[0], s[1]);
        if b < 2 {
            return Err(Error::invalid(format!(
                "batch norm in training mode needs at least 2 rows, got {b}"
            )));
        }
        let xv = self.value(x);
        let mut mean = vec![0.0; f];
        for i in 0..b {
            for (m, v) in mean.iter_mut().zip(xv.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= b as f64);
        let mut var = vec![0.0; f];
        for i in 0..b {
            for ((acc, v), m) in var.iter_mut().zip(xv.row(i)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= b as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (out, xhat) = self.affine_normalize(x, gamma, beta, &mean, &inv_std);
        let node = self.push(
            out,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_coupled: true,
            },
            &[x, gamma, beta],
        );
        Ok((node, BatchStats { mean, var }))
    }

    /// Batch normalization with fixed (running) statistics.
    pub fn batchnorm_infer(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        mean: &[f64],
        var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let s = self.shape(x).to_vec();
        self.check_affine("batchnorm_infer", &s, gamma, beta)?;
        if mean.len() != s[1] || var.len() != s[1] {
            return Err(shape_err("batchnorm_infer stats", &s, &[mean.len()]));
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (out, xhat) = self.affine_normalize(x, gamma, beta, mean, &inv_std);
        Ok(self.push(
            out,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_coupled: false,
            },
            &[x, gamma, beta],
        ))
    }

    fn check_affine(&self, op: &'static str, s: &[usize], gamma: Var, beta: Var) -> Result<()> {
        if s.len() != 2 {
            return Err(shape_err(op, s, &[0, 0]));
        }
        for p in [gamma, beta] {
            if self.shape(p) != [s[1]] {
                return Err(shape_err(op, s, self.shape(p)));
            }
        }
        Ok(())
    }

    fn affine_normalize(&self, x: Var, gamma: Var, beta: Var, mean: &[f64], inv_std: &[f64]) -> (Tensor, Vec<f64>) {
        let xv = self.value(x);
        let (g, bt) = (self.value(gamma).data(), self.value(beta).data());
        let f = mean.len();
        let mut xhat = xv.data().to_vec();
        let mut out = xv.clone();
        for (i, (xh, o)) in xhat.iter_mut().zip(out.data_mut()).enumerate() {
            let j = i % f;
            *xh = (*xh - mean[j]) * inv_std[j];
            *o = g[j] * *xh + bt[j];
        }
        (out, xhat)
    }

    // ── Stochastic ────────────────────────────────────────────────────

    /// Inverted dropout. Identity (the same node) outside training or at
    /// rate 0.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, train: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !train || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let n = self.value(x).numel();
        let scale: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out = {
            let mut out = self.value(x).clone();
            for (o, s) in out.data_mut().iter_mut().zip(&scale) {
                *o *= s;
            }
            out
        };
        Ok(self.push(out, Op::Dropout { x, scale }, &[x]))
    }

    // ── Structural ────────────────────────────────────────────────────

    /// Rows of `table[V,d]` selected by `ids`. Id 0 is padding and always
    /// yields a zero row without receiving gradient.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let s = self.shape(table);
        if s.len() != 2 {
            return Err(shape_err("gather", s, &[0, 0]));
        }
        if ids.is_empty() {
            return Err(Error::Empty("gather with no ids"));
        }
        let (v, d) = (s[0], s[1]);
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(Error::invalid(format!(
                "token id {bad} out of range for embedding table of {v} rows"
            )));
        }
        let tv = self.value(table);
        let mut out = vec![0.0; ids.len() * d];
        for (row, &id) in out.chunks_mut(d).zip(ids) {
            if id != 0 {
                row.copy_from_slice(tv.row(id));
            }
        }
        let out = Tensor::new(vec![ids.len(), d], out)?;
        Ok(self.push(
            out,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
            &[table],
        ))
    }

    /// Juxtaposes rank-1 tensors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Empty("concat of no parts"));
        }
        if parts.len() == 1 {
            return Ok(parts[0]);
        }
        let mut out = Vec::new();
        for &p in parts {
            let s = self.shape(p);
            if s.len() != 1 {
                return Err(shape_err("concat", s, &[0]));
            }
            out.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec()), parts))
    }

    /// Stacks equal-length rank-1 tensors into a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows.first().ok_or(Error::Empty("stack of no rows"))?;
        let n = self.shape(*first).to_vec();
        let mut out = Vec::with_capacity(rows.len() * n[0]);
        for &r in rows {
            if self.shape(r) != n.as_slice() || n.len() != 1 {
                return Err(shape_err("stack_rows", &n, self.shape(r)));
            }
            out.extend_from_slice(self.value(r).data());
        }
        let out = Tensor::new(vec![rows.len(), n[0]], out)?;
        Ok(self.push(out, Op::StackRows(rows.to_vec()), rows))
    }

    /// Row `i` of a matrix as a vector.
    pub fn row(&mut self, x: Var, i: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 2 || i >= s[0] {
            return Err(shape_err("row", s, &[i]));
        }
        let out = Tensor::vector(self.value(x).row(i).to_vec());
        Ok(self.push(out, Op::Row(x, i), &[x]))
    }

    /// `x[start..start+len]` of a vector.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 1 || len == 0 || start + len > s[0] {
            return Err(shape_err("slice", s, &[start, len]));
        }
        let out = Tensor::vector(self.value(x).data()[start..start + len].to_vec());
        Ok(self.push(out, Op::Slice(x, start), &[x]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).clone().reshape(shape.to_vec())?;
        Ok(self.push(out, Op::Reshape(x), &[x]))
    }

    // ── Reductions and loss ───────────────────────────────────────────

    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = v.data().iter().sum::<f64>() / v.numel() as f64;
        self.push(Tensor::scalar(m), Op::Mean(x), &[x])
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits)`,
    /// computed through log-softmax. Per-row log-probabilities are clamped
    /// at ln(1e-12).
    pub fn cross_entropy_logits(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let s = self.shape(logits).to_vec();
        if s.len() != 2 || s[0] != labels.len() {
            return Err(shape_err("cross_entropy", &s, &[labels.len()]));
        }
        let (b, c) = (s[0], s[1]);
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::invalid(format!("label {bad} outside 0..{c}")));
        }
        let mut probs = self.value(logits).data().to_vec();
        let mut clamped = vec![false; b];
        let mut total = 0.0;
        for (i, row) in probs.chunks_mut(c).enumerate() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            let logp = row[labels[i]] - lse;
            if logp < MIN_LOG_PROB {
                clamped[i] = true;
                total -= MIN_LOG_PROB;
            } else {
                total -= logp;
            }
            row.iter_mut().for_each(|z| *z = (*z - lse).exp());
        }
        let loss = Tensor::scalar(total / b as f64);
        Ok(self.push(
            loss,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
                clamped,
            },
            &[logits],
        ))
    }

    // ── Backward ──────────────────────────────────────────────────────

    /// Reverse accumulation from a scalar. Leaf gradients add to whatever
    /// previous calls left behind.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(Error::invalid(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        self.backward_seeded(loss, &[1.0])
    }

    /// Reverse accumulation from an arbitrary node with upstream gradient
    /// `seed` (same length as the node's value).
    pub fn backward_seeded(&mut self, root: Var, seed: &[f64]) -> Result<()> {
        if seed.len() != self.value(root).numel() {
            return Err(shape_err("backward seed", self.shape(root), &[seed.len()]));
        }
        if !self.nodes[root.0].requires_grad {
            return Ok(());
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        adj[root.0] = Some(seed.to_vec());
        let mut leaf_grads = Vec::new();
        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                leaf_grads.push((i, g));
            } else {
                self.propagate(&node.op, &node.value, &g, &mut adj);
            }
        }
        for (i, g) in leaf_grads {
            match &mut self.nodes[i].grad {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn slot<'a>(&self, adj: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(adj[v.0].get_or_insert_with(|| vec![0.0; node.value.numel()]))
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                if let Some(da) = self.slot(adj, *a) {
                    gemm_nt(m, n, k, g, bv.data(), da);
                }
                if let Some(db) = self.slot(adj, *b) {
                    gemm_tn(k, m, n, av.data(), g, db);
                }
            }
            Op::MatMulNT(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[0]);
                if let Some(da) = self.slot(adj, *a) {
                    gemm_nn(m, n, k, g, bv.data(), da);
                }
                if let Some(db) = self.slot(adj, *b) {
                    gemm_tn(n, m, k, g, av.data(), db);
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if let Some(d) = self.slot(adj, *v) {
                        add_into(d, g);
                    }
                }
            }
            Op::AddRow(a, row) => {
                if let Some(da) = self.slot(adj, *a) {
                    add_into(da, g);
                }
                if let Some(dr) = self.slot(adj, *row) {
                    let n = dr.len();
                    for chunk in g.chunks(n) {
                        add_into(dr, chunk);
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                if let Some(da) = self.slot(adj, *a) {
                    for ((d, gi), y) in da.iter_mut().zip(g).zip(bv) {
                        *d += gi * y;
                    }
                }
                if let Some(db) = self.slot(adj, *b) {
                    for ((d, gi), x) in db.iter_mut().zip(g).zip(av) {
                        *d += gi * x;
                    }
                }
            }
            Op::Scale(a, k) => {
                if let Some(da) = self.slot(adj, *a) {
                    for (d, gi) in da.iter_mut().zip(g) {
                        *d += gi * k;
                    }
                }
            }
            Op::Act(a, kind) => {
                let xv = self.value(*a).data();
                if let Some(da) = self.slot(adj, *a) {
                    for (((d, gi), x), y) in da.iter_mut().zip(g).zip(xv).zip(out.data()) {
                        *d += gi * kind.derivative(*x, *y);
                    }
                }
            }
            Op::Conv1d { seq, filters, bias } => {
                let (xv, kv) = (self.value(*seq), self.value(*filters));
                let d = xv.shape()[1];
                let (w, f) = (kv.shape()[0], kv.shape()[2]);
                let out_len = out.shape()[0];
                if let Some(db) = self.slot(adj, *bias) {
                    for chunk in g.chunks(f) {
                        add_into(db, chunk);
                    }
                }
                if let Some(dk) = self.slot(adj, *filters) {
                    let x = xv.data();
                    for t in 0..out_len {
                        let grow = &g[t * f..(t + 1) * f];
                        for kk in 0..w {
                            for c in 0..d {
                                let xval = x[(t + kk) * d + c];
                                let krow = &mut dk[(kk * d + c) * f..(kk * d + c + 1) * f];
                                for (dkv, gv) in krow.iter_mut().zip(grow) {
                                    *dkv += xval * gv;
                                }
                            }
                        }
                    }
                }
                if let Some(dx) = self.slot(adj, *seq) {
                    let k = kv.data();
                    for t in 0..out_len {
                        let grow = &g[t * f..(t + 1) * f];
                        for kk in 0..w {
                            for c in 0..d {
                                let krow = &k[(kk * d + c) * f..(kk * d + c + 1) * f];
                                dx[(t + kk) * d + c] += dot(krow, grow);
                            }
                        }
                    }
                }
            }
            Op::MaxOverTime { x, argmax } => {
                if let Some(dx) = self.slot(adj, *x) {
                    let f = argmax.len();
                    for (j, &t) in argmax.iter().enumerate() {
                        dx[t * f + j] += g[j];
                    }
                }
            }
            Op::SoftmaxMasked { x, mask } => {
                if let Some(dx) = self.slot(adj, *x) {
                    let y = out.data();
                    let inner: f64 = y.iter().zip(g).map(|(a, b)| a * b).sum();
                    for i in 0..y.len() {
                        if mask[i] {
                            dx[i] += y[i] * (g[i] - inner);
                        }
                    }
                }
            }
            Op::SoftmaxRows(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    let c = out.shape()[1];
                    for ((yr, gr), dr) in out.data().chunks(c).zip(g.chunks(c)).zip(dx.chunks_mut(c)) {
                        let inner = dot(yr, gr);
                        for i in 0..c {
                            dr[i] += yr[i] * (gr[i] - inner);
                        }
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.value(*p).numel();
                    if let Some(dp) = self.slot(adj, *p) {
                        add_into(dp, &g[offset..offset + n]);
                    }
                    offset += n;
                }
            }
            Op::StackRows(rows) => {
                let n = out.shape()[1];
                for (i, r) in rows.iter().enumerate() {
                    if let Some(dr) = self.slot(adj, *r) {
                        add_into(dr, &g[i * n..(i + 1) * n]);
                    }
                }
            }
            Op::Row(x, i) => {
                if let Some(dx) = self.slot(adj, *x) {
                    let n = g.len();
                    add_into(&mut dx[i * n..(i + 1) * n], g);
                }
            }
            Op::Slice(x, start) => {
                if let Some(dx) = self.slot(adj, *x) {
                    add_into(&mut dx[*start..*start + g.len()], g);
                }
            }
            Op::Reshape(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    add_into(dx, g);
                }
            }
            Op::Dropout { x, scale } => {
                if let Some(dx) = self.slot(adj, *x) {
                    for ((d, gi), s) in dx.iter_mut().zip(g).zip(scale) {
                        *d += gi * s;
                    }
                }
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_coupled,
            } => {
                let f = inv_std.len();
                let b = g.len() / f;
                let mut sum_g = vec![0.0; f];
                let mut sum_gx = vec![0.0; f];
                for (i, (gi, xh)) in g.iter().zip(xhat).enumerate() {
                    sum_g[i % f] += gi;
                    sum_gx[i % f] += gi * xh;
                }
                if let Some(dg) = self.slot(adj, *gamma) {
                    add_into(dg, &sum_gx);
                }
                if let Some(dbt) = self.slot(adj, *beta) {
                    add_into(dbt, &sum_g);
                }
                let gam = self.value(*gamma).data();
                if let Some(dx) = self.slot(adj, *x) {
                    for (i, d) in dx.iter_mut().enumerate() {
                        let j = i % f;
                        if *batch_coupled {
                            let bf = b as f64;
                            *d += gam[j] * inv_std[j] / bf * (bf * g[i] - sum_g[j] - xhat[i] * sum_gx[j]);
                        } else {
                            *d += g[i] * gam[j] * inv_std[j];
                        }
                    }
                }
            }
            Op::Gather { table, ids } => {
                if let Some(dt) = self.slot(adj, *table) {
                    let d = out.shape()[1];
                    for (row, &id) in g.chunks(d).zip(ids) {
                        if id != 0 {
                            add_into(&mut dt[id * d..(id + 1) * d], row);
                        }
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    dx.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Mean(x) => {
                if let Some(dx) = self.slot(adj, *x) {
                    let n = dx.len() as f64;
                    dx.iter_mut().for_each(|d| *d += g[0] / n);
                }
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
                clamped,
            } => {
                if let Some(dz) = self.slot(adj, *logits) {
                    let b = labels.len();
                    let c = probs.len() / b;
                    let scale = g[0] / b as f64;
                    for i in 0..b {
                        if clamped[i] {
                            continue;
                        }
                        for j in 0..c {
                            let onehot = if j == labels[i] { 1.0 } else { 0.0 };
                            dz[i * c + j] += scale * (probs[i * c + j] - onehot);
                        }
                    }
                }
            }
        }
    }

    /// Consumes the graph, returning accumulated gradients of trainable
    /// parameter leaves.
    pub fn into_param_grads(self) -> ParamGrads {
        let mut out = Vec::new();
        for node in self.nodes {
            if let (Some(id), Some(g)) = (node.param, node.grad) {
                out.push((id, g));
            }
        }
        ParamGrads(out)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }
}

fn shape_err(op: &'static str, left: &[usize], right: &[usize]) -> Error {
    Error::Shape {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shapes checked by caller")
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out[m,n] += a[m,k] · b[k,n]`
fn gemm_nn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            for (o, bv) in orow.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += aip * bv;
            }
        }
    }
}

/// `out[m,n] += a[m,k] · b[n,k]ᵀ`
fn gemm_nt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            out[i * n + j] += dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
}

/// `out[m,n] += a[k,m]ᵀ · b[k,n]`
fn gemm_tn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let api = a[p * m + i];
            for (o, bv) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                *o += api * bv;
            }
        }
    }
}

/// Softmax restricted to `mask`; errors when nothing is unmasked.
pub fn masked_softmax(scores: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if scores.len() != mask.len() {
        return Err(shape_err("masked_softmax", &[scores.len()], &[mask.len()]));
    }
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Empty("softmax mask selects no position"));
    }
    let mut out: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(s, &m)| if m { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_dot() {
        let mut g = Graph::new();
        let i2 = g.constant(mat(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let b = g.constant(mat(2, 2, &[3.0, 4.0, 5.0, 6.0]));
        let c = g.matmul(i2, b).unwrap();
        assert_eq!(g.value(c).data(), &[3.0, 4.0, 5.0, 6.0]);

        let a = g.constant(mat(1, 2, &[1.0, 2.0]));
        let b = g.constant(mat(2, 1, &[3.0, 4.0]));
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        let err = g.matmul(a, b).unwrap_err().to_string();
        assert!(err.contains("[2, 3] vs [2, 3]"), "{err}");
    }

    #[test]
    fn conv_hand_case() {
        let mut g = Graph::new();
        let seq = g.constant(mat(3, 1, &[1.0, 2.0, 3.0]));
        let filt = g.constant(Tensor::new(vec![2, 1, 1], vec![1.0, 1.0]).unwrap());
        let bias = g.constant(Tensor::vector(vec![0.0]));
        let out = g.conv1d_valid(seq, filt, bias).unwrap();
        assert_eq!(g.value(out).shape(), &[2, 1]);
        assert_eq!(g.value(out).data(), &[3.0, 5.0]);
    }

    #[test]
    fn conv_zero_sequence_gives_zero() {
        let mut g = Graph::new();
        let seq = g.constant(Tensor::zeros(&[6, 3]));
        let filt = g.constant(Tensor::filled(&[3, 3, 4], 0.7));
        let bias = g.constant(Tensor::zeros(&[4]));
        let out = g.conv1d_valid(seq, filt, bias).unwrap();
        assert!(g.value(out).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_rejects_short_sequence() {
        let mut g = Graph::new();
        let seq = g.constant(Tensor::zeros(&[2, 1]));
        let filt = g.constant(Tensor::zeros(&[3, 1, 1]));
        let bias = g.constant(Tensor::zeros(&[1]));
        assert!(matches!(
            g.conv1d_valid(seq, filt, bias),
            Err(Error::SequenceTooShort { len: 2, width: 3 })
        ));
    }

    #[test]
    fn max_over_time_values_and_tie_routing() {
        let mut g = Graph::new();
        let x = g.input(mat(2, 2, &[1.0, 9.0, 5.0, 2.0]));
        let m = g.max_over_time(x).unwrap();
        assert_eq!(g.value(m).data(), &[5.0, 9.0]);

        let mut g = Graph::new();
        let x = g.input(mat(2, 1, &[3.0, 3.0]));
        let m = g.max_over_time(x).unwrap();
        let s = g.sum(m);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn max_over_single_row_is_identity() {
        let mut g = Graph::new();
        let x = g.constant(mat(1, 3, &[-1.0, 0.5, 2.0]));
        let m = g.max_over_time(x).unwrap();
        assert_eq!(g.value(m).data(), &[-1.0, 0.5, 2.0]);
    }

    #[test]
    fn activation_values_and_relu_subgradient() {
        assert_eq!(Activation::Relu.apply(-1.5), 0.0);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);

        let mut g = Graph::new();
        let x = g.input(Tensor::vector(vec![0.0, 2.0]));
        let y = g.relu(x);
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn masked_softmax_cases() {
        let w = masked_softmax(&[0.0, 3f64.ln()], &[true, true]).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);

        let w = masked_softmax(&[1.3; 4], &[true; 4]).unwrap();
        assert!(w.iter().all(|&v| v == 0.25));

        let w = masked_softmax(&[5.0, 100.0, 7.0], &[true, false, true]).unwrap();
        let e = (-2f64).exp();
        assert_eq!(w[1], 0.0);
        assert!((w[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((w[2] - 1.0 / (1.0 + e)).abs() < 1e-15);

        assert!(masked_softmax(&[1.0, 2.0], &[false, false]).is_err());
    }

    #[test]
    fn concat_cases() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::vector(vec![1.0, 2.0]));
        let b = g.constant(Tensor::vector(vec![3.0]));
        assert_eq!(g.concat(&[a]).unwrap(), a);
        let c = g.concat(&[a, b]).unwrap();
        assert_eq!(g.value(c).data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn dropout_identities_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![1.0, -2.0, 3.0]));
        assert_eq!(g.dropout(x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(g.dropout(x, 0.7, false, &mut rng).unwrap(), x);
        assert!(g.dropout(x, 1.0, true, &mut rng).is_err());
        assert!(g.dropout(x, -0.1, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut g = Graph::new();
        let x = g.constant(Tensor::filled(&[100_000], 1.0));
        let y = g.dropout(x, 0.5, true, &mut rng).unwrap();
        let mean = g.value(y).data().iter().sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn batchnorm_train_standardizes() {
        let mut g = Graph::new();
        let x = g.constant(mat(4, 2, &[1.0, 10.0, 2.0, 20.0, 3.0, 5.0, 6.0, -4.0]));
        let gamma = g.constant(Tensor::filled(&[2], 1.0));
        let beta = g.constant(Tensor::zeros(&[2]));
        let (y, stats) = g.batchnorm_train(x, gamma, beta, 1e-5).unwrap();
        let y = g.value(y);
        for j in 0..2 {
            let col: Vec<f64> = (0..4).map(|i| y.row(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / 4.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9);
            // ε shrinks the variance slightly below one.
            let expected = stats.var[j] / (stats.var[j] + 1e-5);
            assert!((var - expected).abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-5);
        }
        let single = g.constant(mat(1, 2, &[1.0, 2.0]));
        assert!(g.batchnorm_train(single, gamma, beta, 1e-5).is_err());
    }

    #[test]
    fn batchnorm_affine_and_infer_passthrough() {
        let mut g = Graph::new();
        let x = g.constant(mat(2, 1, &[-1.0, 1.0]));
        let gamma = g.constant(Tensor::vector(vec![2.0]));
        let beta = g.constant(Tensor::vector(vec![3.0]));
        let (y, _) = g.batchnorm_train(x, gamma, beta, 0.0).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 5.0]);

        let one = g.constant(Tensor::vector(vec![1.0]));
        let zero = g.constant(Tensor::vector(vec![0.0]));
        let z = g.batchnorm_infer(x, one, zero, &[0.0], &[1.0], 1e-5).unwrap();
        for (a, b) in g.value(z).data().iter().zip([-1.0, 1.0]) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn backward_product_and_sum() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(2.0));
        let y = g.input(Tensor::scalar(3.0));
        let l = g.mul(x, y).unwrap();
        g.backward(l).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[3.0]);
        assert_eq!(g.grad(y).unwrap(), &[2.0]);

        let mut g = Graph::new();
        let x = g.input(Tensor::vector(vec![1.0, -4.0, 2.5]));
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_twice_doubles_and_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.input(Tensor::vector(vec![1.0, 2.0]));
        let y = g.tanh(x);
        let s = g.sum(y);
        g.backward(s).unwrap();
        let once = g.grad(x).unwrap().to_vec();
        g.backward(s).unwrap();
        let twice = g.grad(x).unwrap();
        for (a, b) in once.iter().zip(twice) {
            assert_eq!(2.0 * a, *b);
        }
        assert!(g.backward(y).is_err());
        g.zero_grad();
        assert!(g.grad(x).is_none());
    }

    #[test]
    fn gather_pads_with_zero_and_checks_range() {
        let mut g = Graph::new();
        let table = g.input(mat(8, 2, &(0..16).map(f64::from).collect::<Vec<_>>()));
        let e = g.gather(table, &[0, 0, 7]).unwrap();
        assert_eq!(g.value(e).data(), &[0.0, 0.0, 0.0, 0.0, 14.0, 15.0]);
        let s = g.sum(e);
        g.backward(s).unwrap();
        let grad = g.grad(table).unwrap();
        assert_eq!(&grad[14..16], &[1.0, 1.0]);
        assert!(grad[..14].iter().all(|&v| v == 0.0));
        assert!(g.gather(table, &[8]).is_err());
    }

    #[test]
    fn cross_entropy_uniform_is_ln2() {
        let mut g = Graph::new();
        let z = g.input(mat(1, 2, &[0.3, 0.3]));
        let l = g.cross_entropy_logits(z, &[1]).unwrap();
        assert!((g.value(l).item() - 2f64.ln()).abs() < 1e-15);
        assert!(g.cross_entropy_logits(z, &[2]).is_err());
    }
}
