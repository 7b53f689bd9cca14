//! Tape of recorded operations and its reverse sweep.

use std::collections::HashMap;

use crate::error::{mismatch, DiffError, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    Linear { x: Var, w: Var, b: Var },
    MatMul { a: Var, b: Var },
    MatMulBt { a: Var, b: Var },
    MatMulSorted { a: Var, b: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Exp(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    SliceCols { x: Var, start: usize },
    ConcatRows(Vec<Var>),
    GatherRows { x: Var, rows: Vec<usize> },
    Reshape(Var),
    Sum(Var),
    SumSquares(Var),
    RowNorms(Var),
    MaskedSoftmax(Var),
    KlStdNormal { mu: Var, log_var: Var },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// A single-use recording of a forward computation.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    bound: HashMap<ParamId, Var>,
}

/// Gradient of a scalar loss with respect to every recorded node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when the node does not influence the loss.
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }
}

fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Records an input that gradients flow into but which is not trained.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Copies `x` as a new leaf: gradients stop here.
    pub fn detach(&mut self, x: Var) -> Var {
        let value = self.value(x).clone();
        self.push(value, Op::Leaf)
    }

    /// Binds a stored parameter. Binding the same id twice returns the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.bound.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.bound.insert(id, v);
        v
    }

    fn matrix(&self, op: &'static str, v: Var) -> Result<&Tensor> {
        let t = self.value(v);
        if !t.is_matrix() {
            return Err(mismatch(op, format!("expected a matrix, got {:?}", t.shape())));
        }
        Ok(t)
    }

    /// `x · w + b` with `x: [r, in]`, `w: [in, out]`, `b: [1, out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xt, wt, bt) = (
            self.matrix("linear", x)?,
            self.matrix("linear", w)?,
            self.matrix("linear", b)?,
        );
        let (r, inp) = (xt.rows(), xt.cols());
        let out = wt.cols();
        if wt.rows() != inp || bt.shape() != [1, out] {
            return Err(mismatch(
                "linear",
                format!("x {:?}, w {:?}, b {:?}", xt.shape(), wt.shape(), bt.shape()),
            ));
        }
        let mut y = vec![0.0; r * out];
        let (xd, wd, bd) = (xt.data(), wt.data(), bt.data());
        for i in 0..r {
            let yr = &mut y[i * out..(i + 1) * out];
            yr.copy_from_slice(bd);
            for k in 0..inp {
                let xk = xd[i * inp + k];
                if xk == 0.0 {
                    continue;
                }
                let wr = &wd[k * out..(k + 1) * out];
                for (yv, wv) in yr.iter_mut().zip(wr) {
                    *yv += xk * wv;
                }
            }
        }
        let value = Tensor::new(&[r, out], y)?;
        Ok(self.push(value, Op::Linear { x, w, b }))
    }

    /// `a · b` with `a: [n, k]`, `b: [k, m]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.matrix("matmul", a)?, self.matrix("matmul", b)?);
        if at.cols() != bt.rows() {
            return Err(mismatch("matmul", format!("{:?} x {:?}", at.shape(), bt.shape())));
        }
        let value = matmul_nn(at, bt);
        Ok(self.push(value, Op::MatMul { a, b }))
    }

    /// `a · bᵀ` with `a: [n, k]`, `b: [m, k]`.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.matrix("matmul_bt", a)?, self.matrix("matmul_bt", b)?);
        if at.cols() != bt.cols() {
            return Err(mismatch("matmul_bt", format!("{:?} x {:?}ᵀ", at.shape(), bt.shape())));
        }
        let value = matmul_nt(at, bt);
        Ok(self.push(value, Op::MatMulBt { a, b }))
    }

    /// `a · b` where every dot product is summed in ascending term order.
    ///
    /// The result is bitwise independent of the order of the rows of `b`
    /// (paired with the matching columns of `a`).
    pub fn matmul_sorted(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (self.matrix("matmul_sorted", a)?, self.matrix("matmul_sorted", b)?);
        if at.cols() != bt.rows() {
            return Err(mismatch(
                "matmul_sorted",
                format!("{:?} x {:?}", at.shape(), bt.shape()),
            ));
        }
        let (n, k, m) = (at.rows(), at.cols(), bt.cols());
        let mut out = vec![0.0; n * m];
        let mut terms = vec![0.0; k];
        for i in 0..n {
            for j in 0..m {
                for (p, term) in terms.iter_mut().enumerate() {
                    *term = at.get(i, p) * bt.get(p, j);
                }
                out[i * m + j] = sorted_sum(&mut terms);
            }
        }
        let value = Tensor::new(&[n, m], out)?;
        Ok(self.push(value, Op::MatMulSorted { a, b }))
    }

    fn zip_with(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (at, bt) = (self.value(a), self.value(b));
        if !at.same_shape(bt) {
            return Err(mismatch(op_name, format!("{:?} vs {:?}", at.shape(), bt.shape())));
        }
        let data = at.data().iter().zip(bt.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(at.shape(), data)?;
        Ok(self.push(value, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|&v| f(v)).collect();
        let value = Tensor::new(t.shape(), data).expect("same shape");
        self.push(value, op)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.map(x, |v| v * c, Op::Scale(x, c))
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        let y = self.map(x, f64::exp, Op::Exp(x));
        if !self.value(y).all_finite() {
            return Err(DiffError::NonFinite("exp"));
        }
        Ok(y)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    /// Side-by-side concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(mismatch("concat_cols", "no inputs"));
        }
        let rows = self.matrix("concat_cols", parts[0])?.rows();
        let mut total = 0;
        for &p in parts {
            let t = self.matrix("concat_cols", p)?;
            if t.rows() != rows {
                return Err(mismatch(
                    "concat_cols",
                    format!("row counts {} vs {}", rows, t.rows()),
                ));
            }
            total += t.cols();
        }
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let value = Tensor::new(&[rows, total], data)?;
        Ok(self.push(value, Op::ConcatCols(parts.to_vec())))
    }

    /// Columns `start .. start + len`.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.matrix("slice_cols", x)?;
        if len == 0 || start + len > t.cols() {
            return Err(mismatch(
                "slice_cols",
                format!("columns {start}..{} of {:?}", start + len, t.shape()),
            ));
        }
        let data = (0..t.rows())
            .flat_map(|r| t.row(r)[start..start + len].iter().copied())
            .collect();
        let value = Tensor::new(&[t.rows(), len], data)?;
        Ok(self.push(value, Op::SliceCols { x, start }))
    }

    /// Stacks matrices with equal column counts.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(mismatch("concat_rows", "no inputs"));
        }
        let cols = self.matrix("concat_rows", parts[0])?.cols();
        let mut data = Vec::new();
        for &p in parts {
            let t = self.matrix("concat_rows", p)?;
            if t.cols() != cols {
                return Err(mismatch(
                    "concat_rows",
                    format!("column counts {} vs {}", cols, t.cols()),
                ));
            }
            data.extend_from_slice(t.data());
        }
        let rows = data.len() / cols;
        let value = Tensor::new(&[rows, cols], data)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec())))
    }

    /// Selects rows by index (repeats allowed).
    pub fn gather_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var> {
        let t = self.matrix("gather_rows", x)?;
        if rows.is_empty() || rows.iter().any(|&r| r >= t.rows()) {
            return Err(mismatch(
                "gather_rows",
                format!("indices {rows:?} into {} rows", t.rows()),
            ));
        }
        let data = rows.iter().flat_map(|&r| t.row(r).iter().copied()).collect();
        let value = Tensor::new(&[rows.len(), t.cols()], data)?;
        Ok(self.push(
            value,
            Op::GatherRows {
                x,
                rows: rows.to_vec(),
            },
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self
            .value(x)
            .reshaped(shape)
            .map_err(|e| mismatch("reshape", e.to_string()))?;
        Ok(self.push(value, Op::Reshape(x)))
    }

    /// Scalar sum of all entries.
    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    /// Scalar sum of squared entries.
    pub fn sum_squares(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().map(|v| v * v).sum();
        self.push(Tensor::scalar(s), Op::SumSquares(x))
    }

    /// Euclidean norm of every row, as a `[rows, 1]` column.
    pub fn row_norms(&mut self, x: Var) -> Result<Var> {
        let t = self.matrix("row_norms", x)?;
        let data: Vec<f64> = (0..t.rows())
            .map(|r| t.row(r).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let value = Tensor::new(&[t.rows(), 1], data)?;
        Ok(self.push(value, Op::RowNorms(x)))
    }

    /// Row-wise softmax restricted to the nonzero entries of `mask`.
    ///
    /// Masked entries get weight exactly zero. A row whose mask is entirely
    /// zero yields an all-zero row. Denominators are summed in ascending
    /// order so each row is independent of its column order.
    pub fn masked_softmax_rows(&mut self, x: Var, mask: &Tensor) -> Result<Var> {
        let t = self.matrix("masked_softmax_rows", x)?;
        if t.shape() != mask.shape() {
            return Err(mismatch(
                "masked_softmax_rows",
                format!("logits {:?} vs mask {:?}", t.shape(), mask.shape()),
            ));
        }
        let (n, m) = (t.rows(), t.cols());
        let mut out = vec![0.0; n * m];
        let mut exps = Vec::with_capacity(m);
        for r in 0..n {
            let row = t.row(r);
            let keep: Vec<usize> = (0..m).filter(|&c| mask.get(r, c) != 0.0).collect();
            if keep.is_empty() {
                continue;
            }
            let max = keep.iter().map(|&c| row[c]).fold(f64::NEG_INFINITY, f64::max);
            exps.clear();
            exps.extend(keep.iter().map(|&c| (row[c] - max).exp()));
            let mut sorted = exps.clone();
            let denom = sorted_sum(&mut sorted);
            for (&c, e) in keep.iter().zip(&exps) {
                out[r * m + c] = e / denom;
            }
        }
        let value = Tensor::new(&[n, m], out)?;
        Ok(self.push(value, Op::MaskedSoftmax(x)))
    }

    /// Closed-form `Σ KL(N(μ, exp(log_var)) ‖ N(0, I))` summed over every row.
    pub fn kl_std_normal(&mut self, mu: Var, log_var: Var) -> Result<Var> {
        let (m, lv) = (self.value(mu), self.value(log_var));
        if !m.same_shape(lv) {
            return Err(mismatch(
                "kl_standard_normal",
                format!("mu {:?} vs log_var {:?}", m.shape(), lv.shape()),
            ));
        }
        let s: f64 = m
            .data()
            .iter()
            .zip(lv.data())
            .map(|(&u, &l)| u * u + l.exp() - 1.0 - l)
            .sum::<f64>()
            * 0.5;
        Ok(self.push(Tensor::scalar(s), Op::KlStdNormal { mu, log_var }))
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Parameter gradients are accumulated into `store`; parameters not on
    /// any path to `loss` are left untouched.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        let lt = self.value(loss);
        if !lt.is_scalar() {
            return Err(DiffError::NotScalar(lt.shape().to_vec()));
        }
        if !lt.all_finite() {
            return Err(DiffError::NonFinite("forward pass"));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lt.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(gy) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &gy, &mut grads);
            grads[idx] = Some(gy);
        }

        for (idx, node) in self.nodes.iter().enumerate() {
            if let (Op::Param(id), Some(g)) = (&node.op, &grads[idx]) {
                if !g.all_finite() {
                    return Err(DiffError::NonFinite("backward pass"));
                }
                store.grad_mut(*id).add_assign(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, idx: usize, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let mut acc = |v: Var, g: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        };
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::Linear { x, w, b } => {
                let (xt, wt) = (self.value(*x), self.value(*w));
                let (r, inp, out) = (xt.rows(), xt.cols(), wt.cols());
                let (xd, wd, gd) = (xt.data(), wt.data(), gy.data());
                let mut gx = vec![0.0; r * inp];
                let mut gw = vec![0.0; inp * out];
                let mut gb = vec![0.0; out];
                for i in 0..r {
                    let gr = &gd[i * out..(i + 1) * out];
                    for (acc_b, g) in gb.iter_mut().zip(gr) {
                        *acc_b += g;
                    }
                    for k in 0..inp {
                        let wr = &wd[k * out..(k + 1) * out];
                        gx[i * inp + k] = wr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        let xk = xd[i * inp + k];
                        if xk != 0.0 {
                            let gwr = &mut gw[k * out..(k + 1) * out];
                            for (acc_w, g) in gwr.iter_mut().zip(gr) {
                                *acc_w += xk * g;
                            }
                        }
                    }
                }
                acc(*x, Tensor::new(xt.shape(), gx).expect("shape"));
                acc(*w, Tensor::new(wt.shape(), gw).expect("shape"));
                acc(*b, Tensor::new(&[1, out], gb).expect("shape"));
            }
            Op::MatMul { a, b } | Op::MatMulSorted { a, b } => {
                let (at, bt) = (self.value(*a), self.value(*b));
                acc(*a, matmul_nt(gy, bt));
                acc(*b, matmul_tn(at, gy));
            }
            Op::MatMulBt { a, b } => {
                let (at, bt) = (self.value(*a), self.value(*b));
                acc(*a, matmul_nn(gy, bt));
                acc(*b, matmul_tn(gy, at));
            }
            Op::Add(a, b) => {
                acc(*a, gy.clone());
                acc(*b, gy.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, gy.clone());
                acc(*b, map_tensor(gy, |g| -g));
            }
            Op::Mul(a, b) => {
                let (at, bt) = (self.value(*a), self.value(*b));
                acc(*a, zip_tensor(gy, bt, |g, y| g * y));
                acc(*b, zip_tensor(gy, at, |g, x| g * x));
            }
            Op::Scale(x, c) => acc(*x, map_tensor(gy, |g| g * c)),
            Op::Exp(x) => acc(*x, zip_tensor(gy, &node.value, |g, y| g * y)),
            Op::Relu(x) => acc(
                *x,
                zip_tensor(gy, self.value(*x), |g, v| if v > 0.0 { g } else { 0.0 }),
            ),
            Op::ConcatCols(parts) => {
                let rows = gy.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    let data = (0..rows)
                        .flat_map(|r| gy.row(r)[offset..offset + w].iter().copied())
                        .collect();
                    acc(p, Tensor::new(&[rows, w], data).expect("shape"));
                    offset += w;
                }
            }
            Op::SliceCols { x, start } => {
                let xt = self.value(*x);
                let mut g = Tensor::zeros(xt.shape());
                let (cols, len) = (xt.cols(), gy.cols());
                for r in 0..gy.rows() {
                    g.data_mut()[r * cols + start..r * cols + start + len]
                        .copy_from_slice(gy.row(r));
                }
                acc(*x, g);
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = self.value(p).len();
                    let g = Tensor::new(self.value(p).shape(), gy.data()[offset..offset + n].to_vec())
                        .expect("shape");
                    acc(p, g);
                    offset += n;
                }
            }
            Op::GatherRows { x, rows } => {
                let xt = self.value(*x);
                let cols = xt.cols();
                let mut g = Tensor::zeros(xt.shape());
                for (i, &r) in rows.iter().enumerate() {
                    for (dst, src) in g.data_mut()[r * cols..(r + 1) * cols]
                        .iter_mut()
                        .zip(gy.row(i))
                    {
                        *dst += src;
                    }
                }
                acc(*x, g);
            }
            Op::Reshape(x) => {
                let shape = self.value(*x).shape().to_vec();
                acc(*x, gy.reshaped(&shape).expect("same volume"));
            }
            Op::Sum(x) => {
                let g = gy.item();
                acc(*x, Tensor::filled(self.value(*x).shape(), g));
            }
            Op::SumSquares(x) => {
                let g = gy.item();
                acc(*x, map_tensor(self.value(*x), |v| 2.0 * v * g));
            }
            Op::RowNorms(x) => {
                let xt = self.value(*x);
                let cols = xt.cols();
                let mut g = Tensor::zeros(xt.shape());
                for r in 0..xt.rows() {
                    let norm = node.value.get(r, 0);
                    if norm > 0.0 {
                        let scale = gy.get(r, 0) / norm;
                        for c in 0..cols {
                            g.data_mut()[r * cols + c] = xt.get(r, c) * scale;
                        }
                    }
                }
                acc(*x, g);
            }
            Op::MaskedSoftmax(x) => {
                let y = &node.value;
                let m = y.cols();
                let mut g = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let (yr, gr) = (y.row(r), gy.row(r));
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for c in 0..m {
                        g.data_mut()[r * m + c] = yr[c] * (gr[c] - dot);
                    }
                }
                acc(*x, g);
            }
            Op::KlStdNormal { mu, log_var } => {
                let g = gy.item();
                acc(*mu, map_tensor(self.value(*mu), |u| u * g));
                acc(
                    *log_var,
                    map_tensor(self.value(*log_var), |l| 0.5 * (l.exp() - 1.0) * g),
                );
            }
        }
    }
}

fn map_tensor(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(t.shape(), t.data().iter().map(|&v| f(v)).collect()).expect("same shape")
}

fn zip_tensor(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.shape(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
    .expect("same shape")
}

/// `a · b`
fn matmul_nn(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let orow = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let av = a.get(i, p);
            if av == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(b.row(p)) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(&[n, m], out).expect("shape")
}

/// `a · bᵀ`
fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, m) = (a.rows(), b.rows());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = a.row(i).iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
        }
    }
    Tensor::new(&[n, m], out).expect("shape")
}

/// `aᵀ · b`
fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (k, n, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for p in 0..k {
        for i in 0..n {
            let av = a.get(p, i);
            if av == 0.0 {
                continue;
            }
            for (o, bv) in out[i * m..(i + 1) * m].iter_mut().zip(b.row(p)) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(&[n, m], out).expect("shape")
}
