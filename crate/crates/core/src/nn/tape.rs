//! Tape-based reverse-mode differentiation over row-major 2-D tensors.
//!
//! Every operation appends one node whose inputs all precede it, so node
//! order is a topological order and [`Tape::backward`] is a single reverse
//! sweep that visits each node once.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;
use crate::nn::tensor::{gemm, matmul, Tensor, Trans};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation with a hand-written adjoint, defined outside this module.
pub trait CustomOp {
    fn name(&self) -> &'static str;

    /// Gradients for each input, given the forward inputs, output and output
    /// gradient. `None` means no gradient flows to that input.
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &Tensor) -> Vec<Option<Tensor>>;
}

enum Op {
    Constant,
    Param,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// `x + b` with `b` a `1×c` row broadcast over rows.
    AddRow(Var, Var),
    /// `x ⊙ s` with `s` a `1×c` row broadcast over rows.
    MulRow(Var, Var),
    /// `x·Wᵀ` with `W` stored `[out, in]`.
    MatMulT(Var, Var),
    /// `x·M` with a constant `M`.
    MatMulConst(Var, Rc<Tensor>),
    Silu(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    Gather(Var, Rc<Vec<usize>>),
    ScatterSum(Var, Rc<Vec<usize>>),
    SegmentSoftmax(Rc<Vec<usize>>),
    /// Row-wise standardization; keeps `1/σ` per row.
    Standardize(Var, Vec<f64>),
    ScaleRows(Var, Rc<Vec<f64>>),
    Sum(Var),
    Mean(Var),
    SmoothL1(Var, Rc<Tensor>, f64),
    Mse(Var, Rc<Tensor>),
    Custom(Vec<Var>, Box<dyn CustomOp>),
}

struct Node {
    value: Tensor,
    op: Op,
    /// Input of unary ops that need it in backward (segment softmax).
    input: Option<Var>,
}

/// Epsilon added to the row variance by [`Tape::standardize`].
pub const STANDARDIZE_EPS: f64 = 1e-6;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<String, Var>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.nodes.len())
            .field("params", &self.params.len())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
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

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.push_with_input(value, op, None)
    }

    fn push_with_input(&mut self, value: Tensor, op: Op, input: Option<Var>) -> Var {
        self.nodes.push(Node { value, op, input });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Leaf for a stored parameter. Repeated calls with one name share a node.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = store
            .value(name)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))?
            .clone();
        let v = self.push(value, Op::Param);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    fn check_same(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::shape(format!("{what} operands {sa:?}"), format!("{sb:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same(a, b, "add")?;
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same(a, b, "sub")?;
        let mut v = self.value(a).clone();
        for (x, y) in v.data_mut().iter_mut().zip(self.value(b).data()) {
            *x -= y;
        }
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same(a, b, "mul")?;
        let mut v = self.value(a).clone();
        for (x, y) in v.data_mut().iter_mut().zip(self.value(b).data()) {
            *x *= y;
        }
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (r, c) = self.shape(x);
        if self.shape(row) != (1, c) {
            return Err(Error::shape(format!("(1, {c})"), format!("{:?}", self.shape(row))));
        }
        let mut v = self.value(x).clone();
        let b = self.value(row).data().to_vec();
        for i in 0..r {
            for (y, bb) in v.row_mut(i).iter_mut().zip(&b) {
                *y += bb;
            }
        }
        Ok(self.push(v, Op::AddRow(x, row)))
    }

    pub fn mul_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (r, c) = self.shape(x);
        if self.shape(row) != (1, c) {
            return Err(Error::shape(format!("(1, {c})"), format!("{:?}", self.shape(row))));
        }
        let mut v = self.value(x).clone();
        let s = self.value(row).data().to_vec();
        for i in 0..r {
            for (y, ss) in v.row_mut(i).iter_mut().zip(&s) {
                *y *= ss;
            }
        }
        Ok(self.push(v, Op::MulRow(x, row)))
    }

    /// `x·Wᵀ` for `x: [n, in]`, `W: [out, in]`.
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xs, ws) = (self.shape(x), self.shape(w));
        if xs.1 != ws.1 {
            return Err(Error::shape(format!("input width {}", ws.1), xs.1));
        }
        let v = matmul(Trans::NT, self.value(x), self.value(w));
        Ok(self.push(v, Op::MatMulT(x, w)))
    }

    /// `x·M` for a constant `M: [in, out]`.
    pub fn matmul_const(&mut self, x: Var, m: Rc<Tensor>) -> Result<Var> {
        if self.shape(x).1 != m.rows() {
            return Err(Error::shape(format!("input width {}", m.rows()), self.shape(x).1));
        }
        let v = matmul(Trans::NN, self.value(x), &m);
        Ok(self.push(v, Op::MatMulConst(x, m)))
    }

    pub fn silu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|z| z * sigmoid(z));
        self.push(v, Op::Silu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(sigmoid);
        self.push(v, Op::Sigmoid(x))
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.shape(parts[0]).0;
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(Error::shape(format!("{rows} rows in every part"), "ragged concat"));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut v = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                v.row_mut(r)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        Ok(self.push(v, Op::Concat(parts.to_vec())))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if start > end || end > cols {
            return Err(Error::shape(format!("columns within 0..{cols}"), format!("{start}..{end}")));
        }
        let mut v = Tensor::zeros(rows, end - start);
        for r in 0..rows {
            v.row_mut(r).copy_from_slice(&self.value(x).row(r)[start..end]);
        }
        Ok(self.push(v, Op::SliceCols(x, start)))
    }

    /// Rows `index[k]` of `x`, in order.
    pub fn gather(&mut self, x: Var, index: Rc<Vec<usize>>) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(Error::shape(format!("row index < {rows}"), bad));
        }
        let mut v = Tensor::zeros(index.len(), cols);
        for (k, &i) in index.iter().enumerate() {
            v.row_mut(k).copy_from_slice(self.value(x).row(i));
        }
        Ok(self.push(v, Op::Gather(x, index)))
    }

    /// `out[s] = Σ_{k : segment[k] = s} x[k]` with `n_segments` output rows.
    /// Rows are summed in index order.
    pub fn scatter_sum(&mut self, x: Var, segment: Rc<Vec<usize>>, n_segments: usize) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if segment.len() != rows {
            return Err(Error::shape(format!("{rows} segment ids"), segment.len()));
        }
        if let Some(&bad) = segment.iter().find(|&&s| s >= n_segments) {
            return Err(Error::shape(format!("segment id < {n_segments}"), bad));
        }
        let mut v = Tensor::zeros(n_segments, cols);
        for (k, &s) in segment.iter().enumerate() {
            let src = self.value(x).row(k).to_vec();
            for (o, x) in v.row_mut(s).iter_mut().zip(&src) {
                *o += x;
            }
        }
        Ok(self.push(v, Op::ScatterSum(x, segment)))
    }

    /// Softmax over rows sharing a segment id, independently per column.
    pub fn segment_softmax(&mut self, x: Var, segment: Rc<Vec<usize>>, n_segments: usize) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if segment.len() != rows {
            return Err(Error::shape(format!("{rows} segment ids"), segment.len()));
        }
        let xv = self.value(x);
        let mut max = Tensor::filled(n_segments, cols, f64::NEG_INFINITY);
        for (k, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                let m = max.get(s, c).max(xv.get(k, c));
                max.set(s, c, m);
            }
        }
        let mut v = Tensor::zeros(rows, cols);
        let mut sum = Tensor::zeros(n_segments, cols);
        for (k, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                let e = (xv.get(k, c) - max.get(s, c)).exp();
                v.set(k, c, e);
                sum.set(s, c, sum.get(s, c) + e);
            }
        }
        for (k, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                v.set(k, c, v.get(k, c) / sum.get(s, c));
            }
        }
        Ok(self.push_with_input(v, Op::SegmentSoftmax(segment), Some(x)))
    }

    /// Per-row `(x − mean)/√(var + ε)`.
    pub fn standardize(&mut self, x: Var) -> Var {
        let (rows, cols) = self.shape(x);
        let mut v = self.value(x).clone();
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = v.row_mut(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + STANDARDIZE_EPS).sqrt();
            for z in row.iter_mut() {
                *z = (*z - mean) * is;
            }
            inv_std.push(is);
        }
        self.push(v, Op::Standardize(x, inv_std))
    }

    /// Multiplies row `r` by `factors[r]`.
    pub fn scale_rows(&mut self, x: Var, factors: Rc<Vec<f64>>) -> Result<Var> {
        let rows = self.shape(x).0;
        if factors.len() != rows {
            return Err(Error::shape(format!("{rows} row factors"), factors.len()));
        }
        let mut v = self.value(x).clone();
        for (r, &f) in factors.iter().enumerate() {
            v.row_mut(r).iter_mut().for_each(|z| *z *= f);
        }
        Ok(self.push(v, Op::ScaleRows(x, factors)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.len().max(1) as f64;
        self.push(Tensor::scalar(s), Op::Mean(x))
    }

    /// Mean smooth-L1 loss with transition point `beta`.
    pub fn smooth_l1(&mut self, pred: Var, target: Rc<Tensor>, beta: f64) -> Result<Var> {
        if self.shape(pred) != target.shape() {
            return Err(Error::shape(format!("{:?}", target.shape()), format!("{:?}", self.shape(pred))));
        }
        let p = self.value(pred);
        let total: f64 = p
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| smooth_l1_elem(a - b, beta))
            .sum();
        let v = Tensor::scalar(total / p.len().max(1) as f64);
        Ok(self.push(v, Op::SmoothL1(pred, target, beta)))
    }

    pub fn mse(&mut self, pred: Var, target: Rc<Tensor>) -> Result<Var> {
        if self.shape(pred) != target.shape() {
            return Err(Error::shape(format!("{:?}", target.shape()), format!("{:?}", self.shape(pred))));
        }
        let p = self.value(pred);
        let total: f64 = p
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let v = Tensor::scalar(total / p.len().max(1) as f64);
        Ok(self.push(v, Op::Mse(pred, target)))
    }

    /// Appends a node computed outside the tape with a custom adjoint.
    pub fn custom(&mut self, inputs: &[Var], output: Tensor, op: Box<dyn CustomOp>) -> Var {
        self.push(output, Op::Custom(inputs.to_vec(), op))
    }

    /// Reverse sweep from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::shape("scalar loss", format!("{:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        let mut params = HashMap::new();
        for (name, v) in &self.params {
            if v.0 < grads.len() {
                if let Some(g) = &grads[v.0] {
                    params.insert(name.clone(), g.clone());
                }
            }
        }
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let accumulate = |grads: &mut [Option<Tensor>], v: Var, t: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&t),
            slot => *slot = Some(t),
        };
        match &node.op {
            Op::Constant | Op::Param => {}
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let mut ga = g.clone();
                ga.data_mut().iter_mut().zip(vb.data()).for_each(|(x, y)| *x *= y);
                let mut gb = g.clone();
                gb.data_mut().iter_mut().zip(va.data()).for_each(|(x, y)| *x *= y);
                accumulate(grads, *a, ga);
                accumulate(grads, *b, gb);
            }
            Op::Scale(a, s) => accumulate(grads, *a, g.map(|x| x * s)),
            Op::AddRow(x, row) => {
                let mut gr = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, v) in gr.data_mut().iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                accumulate(grads, *x, g.clone());
                accumulate(grads, *row, gr);
            }
            Op::MulRow(x, row) => {
                let (vx, vs) = (self.value(*x), self.value(*row));
                let mut gx = g.clone();
                let mut gs = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        gx.set(r, c, g.get(r, c) * vs.get(0, c));
                        gs.data_mut()[c] += g.get(r, c) * vx.get(r, c);
                    }
                }
                accumulate(grads, *x, gx);
                accumulate(grads, *row, gs);
            }
            Op::MatMulT(x, w) => {
                let gx = matmul(Trans::NN, g, self.value(*w));
                let gw = matmul(Trans::TN, g, self.value(*x));
                accumulate(grads, *x, gx);
                accumulate(grads, *w, gw);
            }
            Op::MatMulConst(x, m) => {
                let mut gx = Tensor::zeros(g.rows(), m.rows());
                gemm(Trans::NT, g, m, 0.0, &mut gx);
                accumulate(grads, *x, gx);
            }
            Op::Silu(x) => {
                let vx = self.value(*x);
                let mut gx = g.clone();
                for (o, &z) in gx.data_mut().iter_mut().zip(vx.data()) {
                    let s = sigmoid(z);
                    *o *= s * (1.0 + z * (1.0 - s));
                }
                accumulate(grads, *x, gx);
            }
            Op::Sigmoid(x) => {
                let mut gx = g.clone();
                for (o, &y) in gx.data_mut().iter_mut().zip(node.value.data()) {
                    *o *= y * (1.0 - y);
                }
                accumulate(grads, *x, gx);
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    let mut gp = Tensor::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[off..off + w]);
                    }
                    off += w;
                    accumulate(grads, p, gp);
                }
            }
            Op::SliceCols(x, start) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    gx.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                accumulate(grads, *x, gx);
            }
            Op::Gather(x, index) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Tensor::zeros(rows, cols);
                for (k, &i) in index.iter().enumerate() {
                    for (o, v) in gx.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += v;
                    }
                }
                accumulate(grads, *x, gx);
            }
            Op::ScatterSum(x, segment) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Tensor::zeros(rows, cols);
                for (k, &s) in segment.iter().enumerate() {
                    gx.row_mut(k).copy_from_slice(g.row(s));
                }
                accumulate(grads, *x, gx);
            }
            Op::SegmentSoftmax(segment) => {
                let y = &node.value;
                let cols = y.cols();
                let n_seg = segment.iter().copied().max().map_or(0, |m| m + 1);
                let mut dot = Tensor::zeros(n_seg, cols);
                for (k, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        dot.set(s, c, dot.get(s, c) + y.get(k, c) * g.get(k, c));
                    }
                }
                let mut gx = Tensor::zeros(y.rows(), cols);
                for (k, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        gx.set(k, c, y.get(k, c) * (g.get(k, c) - dot.get(s, c)));
                    }
                }
                accumulate(grads, node.input.expect("softmax input recorded"), gx);
            }
            Op::Standardize(x, inv_std) => {
                let y = &node.value;
                let cols = y.cols() as f64;
                let mut gx = Tensor::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let mean_g = gr.iter().sum::<f64>() / cols;
                    let mean_gy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / cols;
                    for ((o, &gi), &yi) in gx.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *o = inv_std[r] * (gi - mean_g - yi * mean_gy);
                    }
                }
                accumulate(grads, *x, gx);
            }
            Op::ScaleRows(x, factors) => {
                let mut gx = g.clone();
                for (r, &f) in factors.iter().enumerate() {
                    gx.row_mut(r).iter_mut().for_each(|z| *z *= f);
                }
                accumulate(grads, *x, gx);
            }
            Op::Sum(x) => {
                let (rows, cols) = self.shape(*x);
                accumulate(grads, *x, Tensor::filled(rows, cols, g.item()));
            }
            Op::Mean(x) => {
                let (rows, cols) = self.shape(*x);
                let n = (rows * cols).max(1) as f64;
                accumulate(grads, *x, Tensor::filled(rows, cols, g.item() / n));
            }
            Op::SmoothL1(pred, target, beta) => {
                let p = self.value(*pred);
                let n = p.len().max(1) as f64;
                let scale = g.item() / n;
                let data = p
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(a, b)| scale * smooth_l1_grad(a - b, *beta))
                    .collect();
                accumulate(grads, *pred, Tensor::from_vec(p.rows(), p.cols(), data));
            }
            Op::Mse(pred, target) => {
                let p = self.value(*pred);
                let n = p.len().max(1) as f64;
                let scale = 2.0 * g.item() / n;
                let data = p
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(a, b)| scale * (a - b))
                    .collect();
                accumulate(grads, *pred, Tensor::from_vec(p.rows(), p.cols(), data));
            }
            Op::Custom(inputs, op) => {
                let values: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
                let gs = op.backward(&values, &node.value, g);
                debug_assert_eq!(gs.len(), inputs.len(), "custom op {} gradient count", op.name());
                for (&v, gv) in inputs.iter().zip(gs) {
                    if let Some(gv) = gv {
                        accumulate(grads, v, gv);
                    }
                }
            }
        }
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: HashMap<String, Tensor>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `v`, if `v` influences the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    /// Adds parameter gradients into `store`. Returns the learnable parameters
    /// that received no gradient (they keep a zero contribution).
    pub fn accumulate_into(&self, store: &mut ParamStore) -> Vec<String> {
        let mut disconnected = Vec::new();
        for name in store.names() {
            match self.params.get(&name) {
                Some(g) => store.add_grad(&name, g),
                None => {
                    if store.is_learnable(&name) {
                        disconnected.push(name);
                    }
                }
            }
        }
        if !disconnected.is_empty() {
            log::warn!("parameters without gradient: {}", disconnected.join(", "));
        }
        disconnected
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn smooth_l1_elem(d: f64, beta: f64) -> f64 {
    let a = d.abs();
    if a < beta {
        0.5 * d * d / beta
    } else {
        a - 0.5 * beta
    }
}

fn smooth_l1_grad(d: f64, beta: f64) -> f64 {
    if d.abs() < beta {
        d / beta
    } else {
        d.signum()
    }
}
