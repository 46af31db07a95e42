use crate::distributions::{ps_log_normalizer_grad, ps_log_normalizer_unchecked};
use crate::error::{Error, Result};

use super::tensor::{matmul_acc, matmul_tn_acc, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
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

#[derive(Debug)]
enum Op {
    /// Leaf or constant; also the result of any op whose inputs carry no gradient.
    Input,
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MatMul(Var, Var),
    Relu(Var),
    Sum(Var),
    Mean(Var),
    RowSum(Var),
    Log(Var),
    Exp(Var),
    Softplus(Var),
    L2NormalizeRows { input: Var, norms: Vec<f64> },
    BatchStandardize { input: Var, inv_std: Vec<f64> },
    Standardize { input: Var, inv_std: Vec<f64> },
    ClampMin(Var, f64),
    ClampMax(Var, f64),
    Concat { inputs: Vec<Var>, axis: Axis },
    Slice { input: Var, axis: Axis, start: usize },
    PsLogNormalizer { input: Var, dim: f64 },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Batch statistics produced by [`Tape::batch_standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (1/n) variance.
    pub var: Vec<f64>,
}

/// Reverse-mode record of a computation.
///
/// Every op appends one node; inputs always precede outputs, and
/// [`Tape::backward`] walks the nodes in exact reverse order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that required one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when no gradient path reaches `var`.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

fn relu_value(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

pub(crate) fn softplus_value(v: f64) -> f64 {
    if v > 30.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

const NORM_FLOOR: f64 = 1e-12;

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

    /// Trainable leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Input,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Input,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let op = if requires_grad { op } else { Op::Input };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("shapes checked by caller")
    }

    fn matrix_dims(&self, op: &'static str, v: Var) -> Result<(usize, usize)> {
        let t = self.value(v);
        if !t.is_matrix() {
            return Err(Error::shape(op, t.shape(), &[0, 0]));
        }
        Ok((t.shape()[0], t.shape()[1]))
    }

    /// Value-identical copy that carries no gradient path.
    pub fn detach(&mut self, x: Var) -> Var {
        let value = self.value(x).clone();
        self.constant(value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b), &[a, b]))
    }

    /// x[n×m] + bias broadcast over rows; bias is [m] or [1×m].
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (n, m) = self.matrix_dims("add_row", x)?;
        let tb = self.value(bias);
        if tb.len() != m || tb.rows() != 1 {
            return Err(Error::shape("add_row", self.shape(x), tb.shape()));
        }
        let b = tb.data().to_vec();
        let mut out = self.value(x).data().to_vec();
        for row in out.chunks_mut(m) {
            for (o, bv) in row.iter_mut().zip(&b) {
                *o += bv;
            }
        }
        let v = Tensor::matrix(n, m, out)?;
        Ok(self.push(v, Op::AddRow(x, bias), &[x, bias]))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).map(|e| e * c);
        self.push(v, Op::Scale(x, c), &[x])
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -1.0)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).map(|e| e + c);
        self.push(v, Op::AddScalar(x), &[x])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n, k) = self.matrix_dims("matmul", a)?;
        let (k2, m) = self.matrix_dims("matmul", b)?;
        if k != k2 {
            return Err(Error::shape("matmul", self.shape(a), self.shape(b)));
        }
        let mut out = vec![0.0; n * m];
        matmul_acc(self.value(a).data(), self.value(b).data(), &mut out, n, k, m);
        let v = Tensor::matrix(n, m, out)?;
        Ok(self.push(v, Op::MatMul(a, b), &[a, b]))
    }

    /// relu with subgradient 0 at 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(relu_value);
        self.push(v, Op::Relu(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let v = Tensor::scalar(self.value(x).data().iter().sum());
        self.push(v, Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let v = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        self.push(v, Op::Mean(x), &[x])
    }

    /// Sum over columns: [n×m] → [n×1].
    pub fn row_sum(&mut self, x: Var) -> Result<Var> {
        let (n, _) = self.matrix_dims("row_sum", x)?;
        let t = self.value(x);
        let data = (0..n).map(|i| t.row(i).iter().sum()).collect();
        let v = Tensor::matrix(n, 1, data)?;
        Ok(self.push(v, Op::RowSum(x), &[x]))
    }

    /// Row-wise inner products of two [n×m] matrices, as [n×1].
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let p = self.mul(a, b)?;
        self.row_sum(p)
    }

    pub fn log(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::ln);
        self.push(v, Op::Log(x), &[x])
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::exp);
        self.push(v, Op::Exp(x), &[x])
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        let v = self.value(x).map(softplus_value);
        self.push(v, Op::Softplus(x), &[x])
    }

    pub fn clamp_min(&mut self, x: Var, lo: f64) -> Var {
        let v = self.value(x).map(|e| e.max(lo));
        self.push(v, Op::ClampMin(x, lo), &[x])
    }

    pub fn clamp_max(&mut self, x: Var, hi: f64) -> Var {
        let v = self.value(x).map(|e| e.min(hi));
        self.push(v, Op::ClampMax(x, hi), &[x])
    }

    /// Divides every row by its L2 norm (floored at 1e-12).
    pub fn l2_normalize_rows(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        if t.shape().is_empty() {
            return Err(Error::shape("l2_normalize_rows", t.shape(), &[1]));
        }
        let (n, m) = (t.rows(), t.cols());
        let mut out = t.data().to_vec();
        let mut norms = Vec::with_capacity(n);
        for row in out.chunks_mut(m) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(NORM_FLOOR);
            row.iter_mut().for_each(|v| *v /= norm);
            norms.push(norm);
        }
        let v = Tensor::new(t.shape().to_vec(), out)?;
        Ok(self.push(v, Op::L2NormalizeRows { input: x, norms }, &[x]))
    }

    /// Per-column standardization with batch statistics: (x − mean)/√(var + eps).
    pub fn batch_standardize(&mut self, x: Var, eps: f64) -> Result<(Var, BatchStats)> {
        let (n, m) = self.matrix_dims("batch_standardize", x)?;
        if n < 2 {
            return Err(Error::shape("batch_standardize", self.shape(x), &[2, m]));
        }
        let t = self.value(x);
        let mut mean = vec![0.0; m];
        for row in t.data().chunks(m) {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n as f64);
        let mut var = vec![0.0; m];
        for row in t.data().chunks(m) {
            for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - mu) * (v - mu);
            }
        }
        var.iter_mut().for_each(|v| *v /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let out = standardized(t.data(), &mean, &inv_std, m);
        let v = Tensor::matrix(n, m, out)?;
        let stats = BatchStats { mean, var };
        Ok((self.push(v, Op::BatchStandardize { input: x, inv_std }, &[x]), stats))
    }

    /// Per-column standardization with fixed statistics (inference mode).
    pub fn standardize_with(&mut self, x: Var, mean: &[f64], var: &[f64], eps: f64) -> Result<Var> {
        let (n, m) = self.matrix_dims("standardize_with", x)?;
        if mean.len() != m || var.len() != m {
            return Err(Error::shape("standardize_with", self.shape(x), &[mean.len()]));
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let out = standardized(self.value(x).data(), mean, &inv_std, m);
        let v = Tensor::matrix(n, m, out)?;
        Ok(self.push(v, Op::Standardize { input: x, inv_std }, &[x]))
    }

    pub fn concat(&mut self, inputs: &[Var], axis: Axis) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::shape("concat", &[], &[]))?;
        let (_, m0) = self.matrix_dims("concat", first)?;
        let n0 = self.value(first).rows();
        let mut dims = Vec::with_capacity(inputs.len());
        for &v in inputs {
            let (n, m) = self.matrix_dims("concat", v)?;
            let ok = match axis {
                Axis::Rows => m == m0,
                Axis::Cols => n == n0,
            };
            if !ok {
                return Err(Error::shape("concat", self.shape(first), self.shape(v)));
            }
            dims.push((n, m));
        }
        let (v, shape) = match axis {
            Axis::Rows => {
                let mut data = Vec::new();
                for &v in inputs {
                    data.extend_from_slice(self.value(v).data());
                }
                let rows = dims.iter().map(|d| d.0).sum();
                (data, [rows, m0])
            }
            Axis::Cols => {
                let cols: usize = dims.iter().map(|d| d.1).sum();
                let mut data = Vec::with_capacity(n0 * cols);
                for i in 0..n0 {
                    for &v in inputs {
                        data.extend_from_slice(self.value(v).row(i));
                    }
                }
                (data, [n0, cols])
            }
        };
        let value = Tensor::new(shape.to_vec(), v)?;
        let op = Op::Concat {
            inputs: inputs.to_vec(),
            axis,
        };
        Ok(self.push(value, op, inputs))
    }

    /// Half-open range `start..end` along `axis`.
    pub fn slice(&mut self, x: Var, axis: Axis, start: usize, end: usize) -> Result<Var> {
        let (n, m) = self.matrix_dims("slice", x)?;
        let limit = if axis == Axis::Rows { n } else { m };
        if start >= end || end > limit {
            return Err(Error::shape("slice", self.shape(x), &[start, end]));
        }
        let t = self.value(x);
        let (data, shape) = match axis {
            Axis::Rows => (t.data()[start * m..end * m].to_vec(), [end - start, m]),
            Axis::Cols => {
                let mut d = Vec::with_capacity(n * (end - start));
                for i in 0..n {
                    d.extend_from_slice(&t.row(i)[start..end]);
                }
                (d, [n, end - start])
            }
        };
        let v = Tensor::new(shape.to_vec(), data)?;
        Ok(self.push(v, Op::Slice { input: x, axis, start }, &[x]))
    }

    /// Elementwise Power Spherical log-normalizer log C(κ) on S^{dim-1}.
    pub fn ps_log_normalizer(&mut self, kappa: Var, dim: usize) -> Result<Var> {
        let t = self.value(kappa);
        if dim < 2 {
            return Err(Error::domain("ps_log_normalizer", format!("dimension {dim} < 2")));
        }
        if let Some(bad) = t.data().iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::domain(
                "ps_log_normalizer",
                format!("kappa must be finite and non-negative, got {bad}"),
            ));
        }
        let d = dim as f64;
        let v = t.map(|k| ps_log_normalizer_unchecked(d, k));
        Ok(self.push(v, Op::PsLogNormalizer { input: kappa, dim: d }, &[kappa]))
    }

    /// Reverse pass from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::shape("backward", lt.shape(), &[]));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor::full(lt.shape(), 1.0));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let node = &self.nodes[idx];
        let out = &node.value;
        let mut acc = |v: Var, delta: Tensor| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => {
                    for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                        *e += d;
                    }
                }
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Input => {}
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                acc(*a, zip_map(g, tb, |gv, bv| gv * bv));
                acc(*b, zip_map(g, ta, |gv, av| gv * av));
            }
            Op::AddRow(x, bias) => {
                acc(*x, g.clone());
                let m = g.cols();
                let mut gb = vec![0.0; m];
                for row in g.data().chunks(m) {
                    for (s, v) in gb.iter_mut().zip(row) {
                        *s += v;
                    }
                }
                let shape = self.shape(*bias).to_vec();
                acc(*bias, Tensor::new(shape, gb)?);
            }
            Op::Scale(x, c) => acc(*x, g.map(|v| v * c)),
            Op::AddScalar(x) => acc(*x, g.clone()),
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (n, k) = (ta.shape()[0], ta.shape()[1]);
                let m = tb.shape()[1];
                if self.nodes[a.0].requires_grad {
                    let bt = tb.transpose()?;
                    let mut ga = vec![0.0; n * k];
                    matmul_acc(g.data(), bt.data(), &mut ga, n, m, k);
                    acc(*a, Tensor::matrix(n, k, ga)?);
                }
                if self.nodes[b.0].requires_grad {
                    let mut gb = vec![0.0; k * m];
                    matmul_tn_acc(ta.data(), g.data(), &mut gb, n, k, m);
                    acc(*b, Tensor::matrix(k, m, gb)?);
                }
            }
            Op::Relu(x) => {
                acc(*x, zip_map(g, self.value(*x), |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
            }
            Op::Sum(x) => {
                let gv = g.data()[0];
                acc(*x, Tensor::full(self.shape(*x), gv));
            }
            Op::Mean(x) => {
                let n = self.value(*x).len() as f64;
                acc(*x, Tensor::full(self.shape(*x), g.data()[0] / n));
            }
            Op::RowSum(x) => {
                let tx = self.value(*x);
                let m = tx.cols();
                let mut d = Vec::with_capacity(tx.len());
                for gv in g.data() {
                    d.extend(std::iter::repeat_n(*gv, m));
                }
                acc(*x, Tensor::new(tx.shape().to_vec(), d)?);
            }
            Op::Log(x) => acc(*x, zip_map(g, self.value(*x), |gv, xv| gv / xv)),
            Op::Exp(x) => acc(*x, zip_map(g, out, |gv, yv| gv * yv)),
            Op::Softplus(x) => acc(*x, zip_map(g, self.value(*x), |gv, xv| gv * sigmoid(xv))),
            Op::ClampMin(x, lo) => {
                acc(*x, zip_map(g, self.value(*x), |gv, xv| if xv >= *lo { gv } else { 0.0 }));
            }
            Op::ClampMax(x, hi) => {
                acc(*x, zip_map(g, self.value(*x), |gv, xv| if xv <= *hi { gv } else { 0.0 }));
            }
            Op::L2NormalizeRows { input, norms } => {
                let m = out.cols();
                let mut d = Vec::with_capacity(out.len());
                for ((yr, gr), norm) in out.data().chunks(m).zip(g.data().chunks(m)).zip(norms) {
                    let proj: f64 = yr.iter().zip(gr).map(|(y, gv)| y * gv).sum();
                    d.extend(yr.iter().zip(gr).map(|(y, gv)| (gv - y * proj) / norm));
                }
                acc(*input, Tensor::new(out.shape().to_vec(), d)?);
            }
            Op::BatchStandardize { input, inv_std } => {
                let m = out.cols();
                let n = out.rows() as f64;
                let mut sum_g = vec![0.0; m];
                let mut sum_gy = vec![0.0; m];
                for (yr, gr) in out.data().chunks(m).zip(g.data().chunks(m)) {
                    for j in 0..m {
                        sum_g[j] += gr[j];
                        sum_gy[j] += gr[j] * yr[j];
                    }
                }
                let mut d = Vec::with_capacity(out.len());
                for (yr, gr) in out.data().chunks(m).zip(g.data().chunks(m)) {
                    for j in 0..m {
                        d.push(inv_std[j] / n * (n * gr[j] - sum_g[j] - yr[j] * sum_gy[j]));
                    }
                }
                acc(*input, Tensor::new(out.shape().to_vec(), d)?);
            }
            Op::Standardize { input, inv_std } => {
                let m = out.cols();
                let mut d = g.data().to_vec();
                for row in d.chunks_mut(m) {
                    for (v, s) in row.iter_mut().zip(inv_std) {
                        *v *= s;
                    }
                }
                acc(*input, Tensor::new(out.shape().to_vec(), d)?);
            }
            Op::Concat { inputs, axis } => {
                let mut offset = 0;
                for &v in inputs {
                    let shape = self.shape(v).to_vec();
                    let (n, m) = (shape[0], shape[1]);
                    let part = match axis {
                        Axis::Rows => {
                            let w = g.cols();
                            g.data()[offset * w..(offset + n) * w].to_vec()
                        }
                        Axis::Cols => {
                            let mut d = Vec::with_capacity(n * m);
                            for i in 0..n {
                                d.extend_from_slice(&g.row(i)[offset..offset + m]);
                            }
                            d
                        }
                    };
                    offset += if *axis == Axis::Rows { n } else { m };
                    acc(v, Tensor::new(shape, part)?);
                }
            }
            Op::Slice { input, axis, start } => {
                let shape = self.shape(*input).to_vec();
                let m = shape[1];
                let mut d = vec![0.0; shape[0] * m];
                match axis {
                    Axis::Rows => {
                        d[start * m..start * m + g.len()].copy_from_slice(g.data());
                    }
                    Axis::Cols => {
                        let w = g.cols();
                        for i in 0..shape[0] {
                            d[i * m + start..i * m + start + w].copy_from_slice(g.row(i));
                        }
                    }
                }
                acc(*input, Tensor::new(shape, d)?);
            }
            Op::PsLogNormalizer { input, dim } => {
                acc(
                    *input,
                    zip_map(g, self.value(*input), |gv, k| gv * ps_log_normalizer_grad(*dim, k)),
                );
            }
        }
        Ok(())
    }
}

fn standardized(data: &[f64], mean: &[f64], inv_std: &[f64], m: usize) -> Vec<f64> {
    let mut out = data.to_vec();
    for row in out.chunks_mut(m) {
        for j in 0..m {
            row[j] = (row[j] - mean[j]) * inv_std[j];
        }
    }
    out
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
    Tensor::new(b.shape().to_vec(), data).expect("gradient matches value shape")
}
