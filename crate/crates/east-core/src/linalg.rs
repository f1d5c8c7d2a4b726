//! Dense row-major `f64` matrices and the handful of kernels everything
//! else is built on.
//!
//! Kernels use fixed loop orders and no reassociation, so repeated runs on
//! identical inputs are bit-identical. The same kernels back both the plain
//! inference paths and the autodiff tape forward pass; where a loss contract
//! promises "exactly zero for identical inputs", that exactness comes from
//! the two paths sharing these functions.

use thiserror::Error;

/// Additive smoothing applied under the square root when pairwise Euclidean
/// distances feed gradients: `a_ij = sqrt(sum_c d_c^2 + DIST_SMOOTH_EPS)`.
/// Keeps the distance differentiable at coincident rows. Shared by the tape
/// op and the naive oracle so both compute the same function.
pub const DIST_SMOOTH_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op} would produce a non-finite value")]
    NonFiniteValue { op: &'static str },
    #[error("index {index} out of bounds for {len} rows in {op}")]
    IndexOutOfBounds {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{op} requires a non-empty input")]
    Empty { op: &'static str },
}

/// Dense matrix, row-major. A length-`n` vector is an `n x 1` or `1 x n`
/// matrix depending on context; a scalar is `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        if rows.is_empty() {
            return Err(NumericError::Empty { op: "from_rows" });
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(NumericError::DimensionMismatch {
                op: "from_rows",
                left_rows: rows.len(),
                left_cols: cols,
                right_rows: rows.len(),
                right_cols: rows.iter().map(|r| r.len()).max().unwrap_or(0),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericError> {
        if data.len() != rows * cols {
            return Err(NumericError::DimensionMismatch {
                op: "from_vec",
                left_rows: rows,
                left_cols: cols,
                right_rows: 1,
                right_cols: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// 1x1 matrix holding `v`.
    pub fn scalar(v: f64) -> Self {
        Matrix {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    /// Row vector (1 x n).
    pub fn row(values: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    /// Column vector (n x 1).
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Value of a 1x1 matrix.
    pub fn as_scalar(&self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (1, 1));
        self.data[0]
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn shape_err(&self, other: &Matrix, op: &'static str) -> NumericError {
        NumericError::DimensionMismatch {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    /// `self @ other`, naive triple loop in i-k-j order (cache-friendly for
    /// row-major operands, fixed accumulation order).
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if self.cols != other.rows {
            return Err(self.shape_err(other, "matmul"));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, NumericError> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, op));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    /// Elementwise quotient. Any zero denominator entry is rejected rather
    /// than allowed to produce an infinity.
    pub fn div(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "div"));
        }
        if other.data.iter().any(|&b| b == 0.0) {
            return Err(NumericError::NonFiniteValue { op: "div" });
        }
        self.zip_with(other, "div", |a, b| a / b)
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| k * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn relu(&self) -> Matrix {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    /// Numerically stable logistic: never exponentiates a positive argument.
    pub fn sigmoid(&self) -> Matrix {
        self.map(sigmoid)
    }

    /// Elementwise square root; requires strictly positive entries because
    /// the derivative used by the tape blows up at zero.
    pub fn sqrt_strict(&self) -> Result<Matrix, NumericError> {
        if self.data.iter().any(|&v| v <= 0.0) {
            return Err(NumericError::NonFiniteValue { op: "sqrt" });
        }
        Ok(self.map(f64::sqrt))
    }

    pub fn abs(&self) -> Matrix {
        self.map(f64::abs)
    }

    /// Sum of all entries, accumulated in row-major order (1x1 result).
    pub fn sum(&self) -> f64 {
        let mut acc = 0.0;
        for &v in &self.data {
            acc += v;
        }
        acc
    }

    /// Column means: T x C -> 1 x C.
    pub fn mean_rows(&self) -> Result<Matrix, NumericError> {
        if self.rows == 0 {
            return Err(NumericError::Empty { op: "mean_rows" });
        }
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c] += self.data[r * self.cols + c];
            }
        }
        let inv = 1.0 / self.rows as f64;
        for v in &mut out.data {
            *v *= inv;
        }
        Ok(out)
    }

    /// Broadcast-add a 1 x C row to every row of a T x C matrix.
    pub fn add_row(&self, row: &Matrix) -> Result<Matrix, NumericError> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(self.shape_err(row, "add_row"));
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[r * self.cols + c] += row.data[c];
            }
        }
        Ok(out)
    }

    /// Non-overlapping temporal mean pooling over rows with window `factor`;
    /// a short trailing window is averaged over its actual length.
    /// T x C -> ceil(T / factor) x C.
    pub fn pool_rows_mean(&self, factor: usize) -> Result<Matrix, NumericError> {
        if factor == 0 {
            return Err(NumericError::Empty { op: "pool_rows_mean" });
        }
        if self.rows == 0 {
            return Err(NumericError::Empty { op: "pool_rows_mean" });
        }
        let out_rows = self.rows.div_ceil(factor);
        let mut out = Matrix::zeros(out_rows, self.cols);
        for p in 0..out_rows {
            let start = p * factor;
            let end = ((p + 1) * factor).min(self.rows);
            let inv = 1.0 / (end - start) as f64;
            for c in 0..self.cols {
                let mut acc = 0.0;
                for r in start..end {
                    acc += self.data[r * self.cols + c];
                }
                out.data[p * self.cols + c] = acc * inv;
            }
        }
        Ok(out)
    }

    /// New matrix whose row `i` is row `indices[i]` of `self`. Indices may
    /// repeat; that is what implements nearest-neighbor time stretching.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Matrix, NumericError> {
        if indices.is_empty() {
            return Err(NumericError::Empty { op: "gather_rows" });
        }
        let mut out = Matrix::zeros(indices.len(), self.cols);
        for (i, &src) in indices.iter().enumerate() {
            if src >= self.rows {
                return Err(NumericError::IndexOutOfBounds {
                    op: "gather_rows",
                    index: src,
                    len: self.rows,
                });
            }
            out.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(self.row_slice(src));
        }
        Ok(out)
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix, NumericError> {
        let first = parts.first().ok_or(NumericError::Empty { op: "vstack" })?;
        let cols = first.cols;
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(first.shape_err(p, "vstack"));
            }
            rows += p.rows;
        }
        let mut data = Vec::with_capacity(rows * cols);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Diagonal of a square matrix as an n x 1 column.
    pub fn diag_part(&self) -> Result<Matrix, NumericError> {
        if self.rows != self.cols {
            return Err(self.shape_err(self, "diag_part"));
        }
        let data = (0..self.rows).map(|i| self.data[i * self.cols + i]).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: 1,
            data,
        })
    }

    /// Pairwise Euclidean distances between rows: n x C -> n x n, exact
    /// 2-norm, symmetric with a zero diagonal.
    pub fn pairwise_euclidean(&self) -> Matrix {
        self.pairwise_euclidean_with(0.0)
    }

    /// Pairwise Euclidean distances with additive smoothing under the root;
    /// the tape uses `DIST_SMOOTH_EPS` so the gradient exists at coincident
    /// rows. The diagonal stays exactly zero: a point's self-distance is
    /// structurally 0 and constant, so it needs no smoothing.
    pub fn pairwise_euclidean_with(&self, eps: f64) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut acc = eps;
                let a = i * self.cols;
                let b = j * self.cols;
                for c in 0..self.cols {
                    let d = self.data[a + c] - self.data[b + c];
                    acc += d * d;
                }
                out.data[i * n + j] = acc.sqrt();
            }
        }
        out
    }

    /// Double-center a square matrix: subtract row means and column means,
    /// add back the grand mean. Output rows and columns each sum to ~0.
    pub fn double_center(&self) -> Result<Matrix, NumericError> {
        if self.rows != self.cols {
            return Err(self.shape_err(self, "double_center"));
        }
        let n = self.rows;
        if n == 0 {
            return Err(NumericError::Empty { op: "double_center" });
        }
        let inv = 1.0 / n as f64;
        let mut row_mean = vec![0.0; n];
        let mut col_mean = vec![0.0; n];
        let mut grand = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = self.data[i * n + j];
                row_mean[i] += v;
                col_mean[j] += v;
                grand += v;
            }
        }
        for m in row_mean.iter_mut().chain(col_mean.iter_mut()) {
            *m *= inv;
        }
        grand *= inv * inv;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.data[i * n + j] - row_mean[i] - col_mean[j] + grand;
            }
        }
        Ok(out)
    }

    /// Frobenius inner product `sum_ij a_ij * b_ij`.
    pub fn frob_dot(&self, other: &Matrix) -> Result<f64, NumericError> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "frob_dot"));
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            acc += a * b;
        }
        Ok(acc)
    }

    /// Largest absolute entry difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64, NumericError> {
        if !self.same_shape(other) {
            return Err(self.shape_err(other, "max_abs_diff"));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    }
}

/// Stable scalar logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Central-difference gradient of a scalar field `f` at `x`:
/// `g_i = (f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
///
/// Oracle for checking tape gradients; `f` is whatever closure rebuilds the
/// loss from a perturbed copy of one input matrix.
pub fn finite_diff_gradient<F>(f: &mut F, x: &Matrix, eps: f64) -> Result<Matrix, NumericError>
where
    F: FnMut(&Matrix) -> Result<f64, NumericError>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(NumericError::NonFiniteValue {
            op: "finite_diff_gradient",
        });
    }
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for idx in 0..x.data().len() {
        let orig = probe.data()[idx];
        probe.data_mut()[idx] = orig + eps;
        let hi = f(&probe)?;
        probe.data_mut()[idx] = orig - eps;
        let lo = f(&probe)?;
        probe.data_mut()[idx] = orig;
        let g = (hi - lo) / (2.0 * eps);
        if !g.is_finite() {
            return Err(NumericError::NonFiniteValue {
                op: "finite_diff_gradient",
            });
        }
        grad.data_mut()[idx] = g;
    }
    Ok(grad)
}
