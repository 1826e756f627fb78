//! Tape-based reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Tape`] owns every value produced during one forward pass. Nodes are
//! appended in execution order, so the node index is a topological order
//! and [`Tape::backward`] is a single reverse sweep. Tensors are handled
//! through copyable [`Var`] handles.
//!
//! There is no broadcasting. Every binary op requires exactly matching
//! shapes, and callers align shapes explicitly (usually with
//! [`Tape::select_rows`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

/// Operation kinds accepted by [`Tape::apply`].
#[derive(Debug, Clone, PartialEq)]
pub enum OpKind {
    MatMul,
    Add,
    Sub,
    Mul,
    Concat(Axis),
    RowSoftmax,
    MaskedRowSoftmax(Vec<bool>),
    Sigmoid,
    Tanh,
    Relu,
    Log,
    Exp,
    Mean,
    Sum,
    ScalarMul(f64),
    ClampMin(f64),
    EmbeddingSelect(Vec<usize>),
    Transpose,
    Reshape(Vec<usize>),
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Concat(Vec<Var>, Axis),
    Softmax(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Log(Var),
    Exp(Var),
    Mean(Var),
    Sum(Var),
    Scale(Var, f64),
    ClampMin(Var, f64),
    Select(Var, Vec<usize>),
    Transpose(Var),
    Reshape(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
}

/// Record of one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn require_matrix(op: &'static str, t: &Tensor) -> Result<()> {
    if t.is_matrix() {
        Ok(())
    } else {
        Err(Error::Shape {
            op,
            left: t.shape().to_vec(),
            right: vec![],
        })
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
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

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
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

    /// Gradient of the last [`backward`](Self::backward) loss with respect
    /// to `v`. `None` for nodes that do not require grad or were not
    /// reached.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        self.grads
            .get(v.0)
            .and_then(|g| g.as_ref())
            .map(|g| Tensor::new(node.value.shape(), g.clone()).expect("grad shape"))
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Generic entry point dispatching on `kind`.
    pub fn apply(&mut self, kind: OpKind, inputs: &[Var]) -> Result<Var> {
        let arity = |n: usize| -> Result<()> {
            if inputs.len() == n {
                Ok(())
            } else {
                Err(Error::Shape {
                    op: "apply",
                    left: vec![inputs.len()],
                    right: vec![n],
                })
            }
        };
        match kind {
            OpKind::Concat(axis) => self.concat(inputs, axis),
            OpKind::MatMul | OpKind::Add | OpKind::Sub | OpKind::Mul => {
                arity(2)?;
                let (a, b) = (inputs[0], inputs[1]);
                match kind {
                    OpKind::MatMul => self.matmul(a, b),
                    OpKind::Add => self.add(a, b),
                    OpKind::Sub => self.sub(a, b),
                    _ => self.mul(a, b),
                }
            }
            unary => {
                arity(1)?;
                let x = inputs[0];
                match unary {
                    OpKind::RowSoftmax => self.row_softmax(x),
                    OpKind::MaskedRowSoftmax(mask) => self.masked_row_softmax(x, &mask),
                    OpKind::Sigmoid => Ok(self.sigmoid(x)),
                    OpKind::Tanh => Ok(self.tanh(x)),
                    OpKind::Relu => Ok(self.relu(x)),
                    OpKind::Log => Ok(self.log(x)),
                    OpKind::Exp => Ok(self.exp(x)),
                    OpKind::Mean => Ok(self.mean(x)),
                    OpKind::Sum => Ok(self.sum(x)),
                    OpKind::ScalarMul(c) => Ok(self.scale(x, c)),
                    OpKind::ClampMin(lo) => Ok(self.clamp_min(x, lo)),
                    OpKind::EmbeddingSelect(idx) => self.select_rows(x, &idx),
                    OpKind::Transpose => self.transpose(x),
                    OpKind::Reshape(shape) => self.reshape(x, &shape),
                    _ => unreachable!(),
                }
            }
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        require_matrix("matmul", av)?;
        require_matrix("matmul", bv)?;
        let (m, k) = (av.rows(), av.cols());
        let (k2, n) = (bv.rows(), bv.cols());
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        let (ad, bd) = (av.data(), bv.data());
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = ad[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &bd[p * n..(p + 1) * n];
                for (o, bv) in orow.iter_mut().zip(brow) {
                    *o += aip * bv;
                }
            }
        }
        let rg = self.any_grad(&[a, b]);
        let t = Tensor::new(&[m, n], out)?;
        Ok(self.push(t, rg, Op::MatMul(a, b)))
    }

    fn binary(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::Shape {
                op,
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| f(*x, *y)).collect();
        Tensor::new(av.shape(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("add", a, b, |x, y| x + y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(t, rg, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("sub", a, b, |x, y| x - y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(t, rg, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("mul", a, b, |x, y| x * y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(t, rg, Op::Mul(a, b)))
    }

    /// Concatenate 2-D tensors along rows (stacking) or columns.
    pub fn concat(&mut self, parts: &[Var], axis: Axis) -> Result<Var> {
        let first = parts.first().ok_or(Error::Shape {
            op: "concat",
            left: vec![],
            right: vec![],
        })?;
        let base = self.value(*first).clone();
        require_matrix("concat", &base)?;
        let mut rows = 0;
        let mut cols = 0;
        for p in parts {
            let v = self.value(*p);
            require_matrix("concat", v)?;
            let ok = match axis {
                Axis::Rows => v.cols() == base.cols(),
                Axis::Cols => v.rows() == base.rows(),
            };
            if !ok {
                return Err(Error::Shape {
                    op: "concat",
                    left: base.shape().to_vec(),
                    right: v.shape().to_vec(),
                });
            }
            rows += v.rows();
            cols += v.cols();
        }
        let t = match axis {
            Axis::Rows => {
                let mut data = Vec::with_capacity(rows * base.cols());
                for p in parts {
                    data.extend_from_slice(self.value(*p).data());
                }
                Tensor::new(&[rows, base.cols()], data)?
            }
            Axis::Cols => {
                let r = base.rows();
                let mut data = Vec::with_capacity(r * cols);
                for i in 0..r {
                    for p in parts {
                        data.extend_from_slice(self.value(*p).row_slice(i));
                    }
                }
                Tensor::new(&[r, cols], data)?
            }
        };
        let rg = self.any_grad(parts);
        Ok(self.push(t, rg, Op::Concat(parts.to_vec(), axis)))
    }

    /// Softmax along each row, with row-max subtraction.
    pub fn row_softmax(&mut self, x: Var) -> Result<Var> {
        let n = self.value(x).len();
        self.masked_row_softmax(x, &vec![true; n])
    }

    /// Row softmax restricted to entries where `mask` is true; masked
    /// entries are exactly zero. Every row needs at least one open entry.
    pub fn masked_row_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        require_matrix("row-softmax", xv)?;
        if mask.len() != xv.len() {
            return Err(Error::Shape {
                op: "row-softmax",
                left: xv.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let (r, c) = (xv.rows(), xv.cols());
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &xv.data()[i * c..(i + 1) * c];
            let m = &mask[i * c..(i + 1) * c];
            let mut mx = f64::NEG_INFINITY;
            for j in 0..c {
                if m[j] && row[j] > mx {
                    mx = row[j];
                }
            }
            if !m.iter().any(|b| *b) {
                return Err(Error::NoNeighbors { row: i });
            }
            let mut z = 0.0;
            for j in 0..c {
                if m[j] {
                    let e = libm::exp(row[j] - mx);
                    out[i * c + j] = e;
                    z += e;
                }
            }
            for j in 0..c {
                out[i * c + j] /= z;
            }
        }
        let t = Tensor::new(&[r, c], out)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(t, rg, Op::Softmax(x)))
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let xv = self.value(x);
        let data = xv.data().iter().map(|v| f(*v)).collect();
        let t = Tensor::new(xv.shape(), data).expect("unary shape");
        let rg = self.any_grad(&[x]);
        self.push(t, rg, op)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, libm::tanh, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| if v > 0.0 { v } else { 0.0 }, Op::Relu(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, libm::log, Op::Log(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, libm::exp, Op::Exp(x))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, |v| c * v, Op::Scale(x, c))
    }

    /// `max(x, lo)` elementwise; no gradient flows through clamped entries.
    pub fn clamp_min(&mut self, x: Var, lo: f64) -> Var {
        self.unary(x, |v| if v < lo { lo } else { v }, Op::ClampMin(x, lo))
    }

    /// Sum of all entries as a `1 x 1` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.any_grad(&[x]);
        self.push(Tensor::scalar(s), rg, Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let s: f64 = xv.data().iter().sum::<f64>() / xv.len() as f64;
        let rg = self.any_grad(&[x]);
        self.push(Tensor::scalar(s), rg, Op::Mean(x))
    }

    /// Gather rows of a 2-D tensor (embedding lookup). Indices may repeat.
    pub fn select_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let xv = self.value(x);
        require_matrix("embedding-select", xv)?;
        let c = xv.cols();
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            if i >= xv.rows() {
                return Err(Error::Shape {
                    op: "embedding-select",
                    left: xv.shape().to_vec(),
                    right: vec![i],
                });
            }
            data.extend_from_slice(xv.row_slice(i));
        }
        let t = Tensor::new(&[idx.len(), c], data)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(t, rg, Op::Select(x, idx.to_vec())))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        require_matrix("transpose", xv)?;
        let (r, c) = (xv.rows(), xv.cols());
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = xv.data()[i * c + j];
            }
        }
        let t = Tensor::new(&[c, r], data)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(t, rg, Op::Transpose(x)))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(x).reshaped(shape).map_err(|_| Error::Shape {
            op: "reshape",
            left: self.value(x).shape().to_vec(),
            right: shape.to_vec(),
        })?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(t, rg, Op::Reshape(x)))
    }

    /// Reverse sweep from a scalar `loss`. Gradients from any earlier call
    /// are discarded first.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::NonScalarLoss(lv.shape().to_vec()));
        }
        self.grads = vec![None; self.nodes.len()];
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let g = match &self.grads[i] {
                Some(g) => g.clone(),
                None => continue,
            };
            self.propagate(i, &g);
        }
        Ok(())
    }

    fn accumulate(&mut self, v: Var, contrib: Vec<f64>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut self.grads[v.0] {
            Some(g) => add_into(g, &contrib),
            slot @ None => *slot = Some(contrib),
        }
    }

    fn accumulate_with(&mut self, v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.nodes[v.0].value.len();
        let slot = self.grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        f(slot);
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let av = self.nodes[a.0].value.clone();
                let bv = self.nodes[b.0].value.clone();
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                let (ad, bd) = (av.data(), bv.data());
                // dA = G * B^T
                self.accumulate_with(a, |da| {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            let mut s = 0.0;
                            for (x, y) in grow.iter().zip(brow) {
                                s += x * y;
                            }
                            da[r * k + p] += s;
                        }
                    }
                });
                // dB = A^T * G
                self.accumulate_with(b, |db| {
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let arp = ad[r * k + p];
                            if arp == 0.0 {
                                continue;
                            }
                            let drow = &mut db[p * n..(p + 1) * n];
                            for (d, x) in drow.iter_mut().zip(grow) {
                                *d += arp * x;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                self.accumulate(a, g.to_vec());
                self.accumulate(b, g.to_vec());
            }
            Op::Sub(a, b) => {
                self.accumulate(a, g.to_vec());
                self.accumulate(b, g.iter().map(|v| -v).collect());
            }
            Op::Mul(a, b) => {
                let av = self.nodes[a.0].value.data().to_vec();
                let bv = self.nodes[b.0].value.data().to_vec();
                self.accumulate(a, g.iter().zip(&bv).map(|(x, y)| x * y).collect());
                self.accumulate(b, g.iter().zip(&av).map(|(x, y)| x * y).collect());
            }
            Op::Concat(parts, axis) => {
                let out_cols = self.nodes[i].value.cols();
                let mut row_off = 0;
                let mut col_off = 0;
                for p in parts {
                    let (pr, pc) = {
                        let v = &self.nodes[p.0].value;
                        (v.rows(), v.cols())
                    };
                    let mut contrib = vec![0.0; pr * pc];
                    for r in 0..pr {
                        for c in 0..pc {
                            contrib[r * pc + c] = match axis {
                                Axis::Rows => g[(row_off + r) * out_cols + c],
                                Axis::Cols => g[r * out_cols + col_off + c],
                            };
                        }
                    }
                    self.accumulate(p, contrib);
                    row_off += pr;
                    col_off += pc;
                }
            }
            Op::Softmax(x) => {
                let y = &self.nodes[i].value;
                let c = y.cols();
                let yd = y.data();
                let mut dx = vec![0.0; yd.len()];
                for r in 0..y.rows() {
                    let ys = &yd[r * c..(r + 1) * c];
                    let gs = &g[r * c..(r + 1) * c];
                    let dot: f64 = ys.iter().zip(gs).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        dx[r * c + j] = ys[j] * (gs[j] - dot);
                    }
                }
                self.accumulate(x, dx);
            }
            Op::Sigmoid(x) => {
                let y = self.nodes[i].value.data();
                let dx = g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                self.accumulate(x, dx);
            }
            Op::Tanh(x) => {
                let y = self.nodes[i].value.data();
                let dx = g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                self.accumulate(x, dx);
            }
            Op::Relu(x) => {
                let xv = self.nodes[x.0].value.data();
                let dx = g
                    .iter()
                    .zip(xv)
                    .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                    .collect();
                self.accumulate(x, dx);
            }
            Op::Log(x) => {
                let xv = self.nodes[x.0].value.data();
                let dx = g.iter().zip(xv).map(|(g, v)| g / v).collect();
                self.accumulate(x, dx);
            }
            Op::Exp(x) => {
                let y = self.nodes[i].value.data();
                let dx = g.iter().zip(y).map(|(g, y)| g * y).collect();
                self.accumulate(x, dx);
            }
            Op::Mean(x) => {
                let n = self.nodes[x.0].value.len();
                self.accumulate(x, vec![g[0] / n as f64; n]);
            }
            Op::Sum(x) => {
                let n = self.nodes[x.0].value.len();
                self.accumulate(x, vec![g[0]; n]);
            }
            Op::Scale(x, c) => {
                self.accumulate(x, g.iter().map(|v| c * v).collect());
            }
            Op::ClampMin(x, lo) => {
                let xv = self.nodes[x.0].value.data();
                let dx = g
                    .iter()
                    .zip(xv)
                    .map(|(g, v)| if *v < lo { 0.0 } else { *g })
                    .collect();
                self.accumulate(x, dx);
            }
            Op::Select(x, idx) => {
                let c = self.nodes[x.0].value.cols();
                self.accumulate_with(x, |dx| {
                    for (k, &r) in idx.iter().enumerate() {
                        add_into(&mut dx[r * c..(r + 1) * c], &g[k * c..(k + 1) * c]);
                    }
                });
            }
            Op::Transpose(x) => {
                let (r, c) = {
                    let v = &self.nodes[x.0].value;
                    (v.rows(), v.cols())
                };
                let mut dx = vec![0.0; r * c];
                for a in 0..r {
                    for b in 0..c {
                        dx[a * c + b] = g[b * r + a];
                    }
                }
                self.accumulate(x, dx);
            }
            Op::Reshape(x) => self.accumulate(x, g.to_vec()),
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + libm::exp(-v))
    } else {
        let e = libm::exp(v);
        e / (1.0 + e)
    }
}
