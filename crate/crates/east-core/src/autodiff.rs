//! Matrix-valued reverse-mode automatic differentiation.
//!
//! A [`Tape`] records an eager computation graph: every op validates shapes,
//! computes its value immediately with the shared [`crate::linalg`] kernels,
//! and appends a node. [`Tape::backward`] walks the nodes in reverse and
//! accumulates matrix gradients for every node reachable from an
//! [`Tape::input`]. Constants never receive gradients, which is how teacher
//! quantities are kept out of the update path.
//!
//! The op set is exactly what the losses in this crate need; it is not a
//! general tensor library.

use crate::linalg::{Matrix, NumericError, DIST_SMOOTH_EPS};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Constant,
    Matmul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    Sigmoid(usize),
    Sqrt(usize),
    Abs(usize),
    Sum(usize),
    MeanRows(usize),
    AddRow(usize, usize),
    PoolRowsMean(usize, usize),
    GatherRows(usize, Vec<usize>),
    Vstack(Vec<usize>),
    /// Smoothed pairwise Euclidean distance between rows (see
    /// [`DIST_SMOOTH_EPS`]).
    PairwiseEuclidean(usize),
    DoubleCenter(usize),
    DiagPart(usize),
    /// Mean of elementwise binary cross-entropy with logits over the
    /// masked-in entries; targets and mask are non-differentiable payloads.
    BceWithLogits {
        logits: usize,
        targets: Box<Matrix>,
        mask: Box<Matrix>,
        masked_count: usize,
    },
}

struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, if `var` influenced it.
    pub fn wrt(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(|g| g.as_ref())
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable leaf.
    pub fn input(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Input, true)
    }

    /// Non-differentiable leaf (teacher values, masks, index structure).
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn scalar_constant(&mut self, v: f64) -> Var {
        self.constant(Matrix::scalar(v))
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.nodes[var.0].value
    }

    /// Value of a 1x1 node.
    pub fn scalar_value(&self, var: Var) -> f64 {
        self.nodes[var.0].value.as_scalar()
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(
        &mut self,
        a: Var,
        op: impl FnOnce(usize) -> Op,
        value: Matrix,
    ) -> Var {
        let needs = self.nodes[a.0].needs_grad;
        self.push(value, op(a.0), needs)
    }

    fn binary(&mut self, a: Var, b: Var, op: impl FnOnce(usize, usize) -> Op, value: Matrix) -> Var {
        let needs = self.nodes[a.0].needs_grad || self.nodes[b.0].needs_grad;
        self.push(value, op(a.0, b.0), needs)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.binary(a, b, Op::Matmul, value))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.unary(a, Op::Transpose, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.binary(a, b, Op::Add, value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.binary(a, b, Op::Sub, value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        let value = self.value(a).mul(self.value(b))?;
        Ok(self.binary(a, b, Op::Mul, value))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        let value = self.value(a).div(self.value(b))?;
        Ok(self.binary(a, b, Op::Div, value))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = self.value(a).scale(k);
        self.unary(a, |i| Op::Scale(i, k), value)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).relu();
        self.unary(a, Op::Relu, value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).sigmoid();
        self.unary(a, Op::Sigmoid, value)
    }

    /// Elementwise square root; entries must be strictly positive.
    pub fn sqrt(&mut self, a: Var) -> Result<Var, NumericError> {
        let value = self.value(a).sqrt_strict()?;
        Ok(self.unary(a, Op::Sqrt, value))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).abs();
        self.unary(a, Op::Abs, value)
    }

    /// Sum of all entries (1x1).
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        self.unary(a, Op::Sum, value)
    }

    /// Column means: T x C -> 1 x C.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var, NumericError> {
        let value = self.value(a).mean_rows()?;
        Ok(self.unary(a, Op::MeanRows, value))
    }

    /// Broadcast-add a 1 x C row (e.g. a bias) to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, NumericError> {
        let value = self.value(a).add_row(self.value(row))?;
        Ok(self.binary(a, row, |x, r| Op::AddRow(x, r), value))
    }

    /// Non-overlapping temporal mean pooling over rows.
    pub fn pool_rows_mean(&mut self, a: Var, factor: usize) -> Result<Var, NumericError> {
        let value = self.value(a).pool_rows_mean(factor)?;
        Ok(self.unary(a, |i| Op::PoolRowsMean(i, factor), value))
    }

    /// Row gather; repeated indices scatter-add their gradients back.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var, NumericError> {
        let value = self.value(a).gather_rows(indices)?;
        Ok(self.unary(a, |i| Op::GatherRows(i, indices.to_vec()), value))
    }

    pub fn vstack(&mut self, parts: &[Var]) -> Result<Var, NumericError> {
        let values: Vec<&Matrix> = parts.iter().map(|v| self.value(*v)).collect();
        let value = Matrix::vstack(&values)?;
        let needs = parts.iter().any(|v| self.nodes[v.0].needs_grad);
        let ids = parts.iter().map(|v| v.0).collect();
        Ok(self.push(value, Op::Vstack(ids), needs))
    }

    /// Smoothed pairwise Euclidean distances between rows (n x C -> n x n).
    pub fn pairwise_euclidean(&mut self, a: Var) -> Var {
        let value = self.value(a).pairwise_euclidean_with(DIST_SMOOTH_EPS);
        self.unary(a, Op::PairwiseEuclidean, value)
    }

    pub fn double_center(&mut self, a: Var) -> Result<Var, NumericError> {
        let value = self.value(a).double_center()?;
        Ok(self.unary(a, Op::DoubleCenter, value))
    }

    pub fn diag_part(&mut self, a: Var) -> Result<Var, NumericError> {
        let value = self.value(a).diag_part()?;
        Ok(self.unary(a, Op::DiagPart, value))
    }

    /// Mean over masked-in entries of the stable elementwise BCE-with-logits
    ///
    /// ```text
    /// bce(z, y) = max(z, 0) - z*y + ln(1 + exp(-|z|))
    /// ```
    ///
    /// `targets` may be soft (inside [0,1]); `mask` entries must be 0 or 1
    /// and at least one entry must be masked in. Gradients flow to `logits`
    /// only.
    pub fn bce_with_logits(
        &mut self,
        logits: Var,
        targets: &Matrix,
        mask: &Matrix,
    ) -> Result<Var, NumericError> {
        let z = self.value(logits);
        if !z.same_shape(targets) || !z.same_shape(mask) {
            return Err(NumericError::DimensionMismatch {
                op: "bce_with_logits",
                left_rows: z.rows(),
                left_cols: z.cols(),
                right_rows: targets.rows(),
                right_cols: targets.cols(),
            });
        }
        let mut masked_count = 0usize;
        let mut acc = 0.0;
        for ((&zv, &yv), &mv) in z.data().iter().zip(targets.data()).zip(mask.data()) {
            if mv == 0.0 {
                continue;
            }
            masked_count += 1;
            acc += zv.max(0.0) - zv * yv + (-zv.abs()).exp().ln_1p();
        }
        if masked_count == 0 {
            return Err(NumericError::Empty {
                op: "bce_with_logits",
            });
        }
        let value = Matrix::scalar(acc / masked_count as f64);
        let needs = self.nodes[logits.0].needs_grad;
        Ok(self.push(
            value,
            Op::BceWithLogits {
                logits: logits.0,
                targets: Box::new(targets.clone()),
                mask: Box::new(mask.clone()),
                masked_count,
            },
            needs,
        ))
    }

    /// Reverse pass from a 1x1 `loss` node. Returns a gradient per reachable
    /// differentiable node; nodes that do not influence the loss report
    /// `None`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumericError> {
        let out = &self.nodes[loss.0].value;
        if out.rows() != 1 || out.cols() != 1 {
            return Err(NumericError::DimensionMismatch {
                op: "backward",
                left_rows: out.rows(),
                left_cols: out.cols(),
                right_rows: 1,
                right_cols: 1,
            });
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].needs_grad {
                continue;
            }
            let Some(g) = grads[idx].clone() else {
                continue;
            };
            self.accumulate_parents(idx, &g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn add_grad(&self, grads: &mut [Option<Matrix>], parent: usize, delta: Matrix) {
        if !self.nodes[parent].needs_grad {
            return;
        }
        match &mut grads[parent] {
            Some(acc) => {
                debug_assert!(acc.same_shape(&delta));
                for (a, d) in acc.data_mut().iter_mut().zip(delta.data()) {
                    *a += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn accumulate_parents(
        &self,
        idx: usize,
        g: &Matrix,
        grads: &mut [Option<Matrix>],
    ) -> Result<(), NumericError> {
        match &self.nodes[idx].op {
            Op::Input | Op::Constant => {}
            Op::Matmul(a, b) => {
                let da = g.matmul(&self.nodes[*b].value.transpose())?;
                let db = self.nodes[*a].value.transpose().matmul(g)?;
                self.add_grad(grads, *a, da);
                self.add_grad(grads, *b, db);
            }
            Op::Transpose(a) => {
                self.add_grad(grads, *a, g.transpose());
            }
            Op::Add(a, b) => {
                self.add_grad(grads, *a, g.clone());
                self.add_grad(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.add_grad(grads, *a, g.clone());
                self.add_grad(grads, *b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                let da = g.mul(&self.nodes[*b].value)?;
                let db = g.mul(&self.nodes[*a].value)?;
                self.add_grad(grads, *a, da);
                self.add_grad(grads, *b, db);
            }
            Op::Div(a, b) => {
                // d(a/b)/da = 1/b, d(a/b)/db = -a/b^2 = -value/b.
                let vb = &self.nodes[*b].value;
                let da = g.div(vb)?;
                let db = g.mul(&self.nodes[idx].value)?.div(vb)?.scale(-1.0);
                self.add_grad(grads, *a, da);
                self.add_grad(grads, *b, db);
            }
            Op::Scale(a, k) => {
                self.add_grad(grads, *a, g.scale(*k));
            }
            Op::Relu(a) => {
                let va = &self.nodes[*a].value;
                let da = g.mul(&va.map(|v| if v > 0.0 { 1.0 } else { 0.0 }))?;
                self.add_grad(grads, *a, da);
            }
            Op::Sigmoid(a) => {
                // s' = s (1 - s), read off the cached output.
                let s = &self.nodes[idx].value;
                let da = g.mul(&s.map(|v| v * (1.0 - v)))?;
                self.add_grad(grads, *a, da);
            }
            Op::Sqrt(a) => {
                // d sqrt(x) = 1 / (2 sqrt(x)); the forward pass rejected
                // non-positive entries so the cached output is positive.
                let s = &self.nodes[idx].value;
                let da = g.mul(&s.map(|v| 0.5 / v))?;
                self.add_grad(grads, *a, da);
            }
            Op::Abs(a) => {
                let va = &self.nodes[*a].value;
                let da = g.mul(&va.map(|v| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }))?;
                self.add_grad(grads, *a, da);
            }
            Op::Sum(a) => {
                let va = &self.nodes[*a].value;
                let s = g.as_scalar();
                let da = Matrix::from_vec(va.rows(), va.cols(), vec![s; va.rows() * va.cols()])?;
                self.add_grad(grads, *a, da);
            }
            Op::MeanRows(a) => {
                let va = &self.nodes[*a].value;
                let inv = 1.0 / va.rows() as f64;
                let mut da = Matrix::zeros(va.rows(), va.cols());
                for r in 0..va.rows() {
                    for c in 0..va.cols() {
                        da.set(r, c, g.get(0, c) * inv);
                    }
                }
                self.add_grad(grads, *a, da);
            }
            Op::AddRow(a, row) => {
                self.add_grad(grads, *a, g.clone());
                let mut dr = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        dr.set(0, c, dr.get(0, c) + g.get(r, c));
                    }
                }
                self.add_grad(grads, *row, dr);
            }
            Op::PoolRowsMean(a, factor) => {
                let va = &self.nodes[*a].value;
                let mut da = Matrix::zeros(va.rows(), va.cols());
                for p in 0..g.rows() {
                    let start = p * factor;
                    let end = ((p + 1) * factor).min(va.rows());
                    let inv = 1.0 / (end - start) as f64;
                    for r in start..end {
                        for c in 0..va.cols() {
                            da.set(r, c, g.get(p, c) * inv);
                        }
                    }
                }
                self.add_grad(grads, *a, da);
            }
            Op::GatherRows(a, indices) => {
                let va = &self.nodes[*a].value;
                let mut da = Matrix::zeros(va.rows(), va.cols());
                for (i, &src) in indices.iter().enumerate() {
                    for c in 0..va.cols() {
                        da.set(src, c, da.get(src, c) + g.get(i, c));
                    }
                }
                self.add_grad(grads, *a, da);
            }
            Op::Vstack(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let rows = self.nodes[p].value.rows();
                    let cols = self.nodes[p].value.cols();
                    let mut dp = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            dp.set(r, c, g.get(offset + r, c));
                        }
                    }
                    offset += rows;
                    self.add_grad(grads, p, dp);
                }
            }
            Op::PairwiseEuclidean(a) => {
                // a_ij = sqrt(sum_c (x_ic - x_jc)^2 + eps), so
                // d a_ij / d x_ic = (x_ic - x_jc) / a_ij and the transposed
                // entry contributes symmetrically. The diagonal is constant
                // zero and carries no gradient.
                let x = &self.nodes[*a].value;
                let dist = &self.nodes[idx].value;
                let n = x.rows();
                let mut dx = Matrix::zeros(n, x.cols());
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let w = g.get(i, j) + g.get(j, i);
                        if w == 0.0 {
                            continue;
                        }
                        let inv = 1.0 / dist.get(i, j);
                        for c in 0..x.cols() {
                            let d = x.get(i, c) - x.get(j, c);
                            dx.set(i, c, dx.get(i, c) + w * d * inv);
                        }
                    }
                }
                self.add_grad(grads, *a, dx);
            }
            Op::DoubleCenter(a) => {
                // Double-centering is P A P with P = I - J/n symmetric, so
                // the adjoint is double-centering of the upstream gradient.
                self.add_grad(grads, *a, g.double_center()?);
            }
            Op::DiagPart(a) => {
                let n = self.nodes[*a].value.rows();
                let mut da = Matrix::zeros(n, n);
                for i in 0..n {
                    da.set(i, i, g.get(i, 0));
                }
                self.add_grad(grads, *a, da);
            }
            Op::BceWithLogits {
                logits,
                targets,
                mask,
                masked_count,
            } => {
                // d/dz [max(z,0) - z y + ln(1+e^(-|z|))] = sigmoid(z) - y.
                let z = &self.nodes[*logits].value;
                let scale = g.as_scalar() / *masked_count as f64;
                let mut dz = Matrix::zeros(z.rows(), z.cols());
                for (i, ((&zv, &yv), &mv)) in
                    z.data().iter().zip(targets.data()).zip(mask.data()).enumerate()
                {
                    if mv != 0.0 {
                        dz.data_mut()[i] = scale * (crate::linalg::sigmoid(zv) - yv);
                    }
                }
                self.add_grad(grads, *logits, dz);
            }
        }
        Ok(())
    }
}
