//! Dense linear-algebra kernels for the decoders: Gram assembly, Cholesky
//! factorization, and triangular solves.
//!
//! Everything here works through the factored form `RᵀR`; no routine forms or
//! applies a matrix inverse. All storage is row-major `f64`.

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, checking length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} = {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NotFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for results of arithmetic on already-validated inputs.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from nested rows (test and example convenience).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let (row_out, row_rhs) = (i * rhs.cols, k * rhs.cols);
                for j in 0..rhs.cols {
                    out.data[row_out + j] += a * rhs.data[row_rhs + j];
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn transpose_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{})ᵀ * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                let (row_out, row_rhs) = (i * rhs.cols, k * rhs.cols);
                for j in 0..rhs.cols {
                    out.data[row_out + j] += a * rhs.data[row_rhs + j];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} - {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_parts(self.rows, self.cols, data))
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Upper-triangular square matrix with strictly positive diagonal.
///
/// Entries strictly below the diagonal are exactly zero; the constructor
/// enforces both invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl UpperTriangular {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} entries, got {}",
                dim,
                dim,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NotFinite);
        }
        for i in 0..dim {
            if data[i * dim + i] <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal entry {} is {} (must be > 0)",
                    i,
                    data[i * dim + i]
                )));
            }
            for j in 0..i {
                if data[i * dim + j] != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "below-diagonal entry ({i}, {j}) is nonzero"
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Skips invariant checks; used for in-crate construction and for tests
    /// that exercise the defensive zero-diagonal path in the solvers.
    pub(crate) fn from_raw_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            data[i * dim + i] = d;
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim]).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.data[i * self.dim + i]
    }

    pub fn min_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.diag(i)).fold(f64::INFINITY, f64::min)
    }

    /// Column scaling `R · diag(s)`; used to form the scaled factor per column.
    pub fn scale_columns(&self, s: &[f64]) -> Result<UpperTriangular> {
        if s.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "scale vector length {} vs dim {}",
                s.len(),
                self.dim
            )));
        }
        if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("scales must be positive".into()));
        }
        let mut data = self.data.clone();
        for i in 0..self.dim {
            for j in i..self.dim {
                data[i * self.dim + j] *= s[j];
            }
        }
        Ok(Self { dim: self.dim, data })
    }

    /// `R · x` for tests and residual checks.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs dim {}",
                x.len(),
                self.dim
            )));
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in i..self.dim {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_parts(self.dim, self.dim, self.data.clone())
    }
}

/// Regularized Gram matrix `G = XᵀX + λ²I`, symmetrized as `(G + Gᵀ)/2` to
/// absorb floating-point asymmetry in the product.
pub fn gram_regularized(xt: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if xt.rows() == 0 || xt.cols() == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let mut g = xt.transpose_matmul(xt)?;
    let m = g.rows();
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (g.get(i, j) + g.get(j, i));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    if lambda > 0.0 {
        let l2 = lambda * lambda;
        for i in 0..m {
            let v = g.get(i, i) + l2;
            g.set(i, i, v);
        }
    }
    Ok(g)
}

/// Cholesky factorization `G = RᵀR` with `R` upper triangular.
///
/// A pivot at or below `dim · ε · max|G|` fails with
/// [`Error::NotPositiveDefinite`]; the caller's remedy is to raise λ. No
/// jitter is ever added silently.
pub fn cholesky(g: &DenseMatrix) -> Result<UpperTriangular> {
    if g.rows() != g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Cholesky of {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let m = g.rows();
    let tol = m as f64 * f64::EPSILON * g.max_abs();
    let mut r = vec![0.0; m * m];
    for j in 0..m {
        let mut pivot = g.get(j, j);
        for k in 0..j {
            pivot -= r[k * m + j] * r[k * m + j];
        }
        if pivot <= tol {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        r[j * m + j] = d;
        for i in (j + 1)..m {
            let mut acc = g.get(j, i);
            for k in 0..j {
                acc -= r[k * m + j] * r[k * m + i];
            }
            r[j * m + i] = acc / d;
        }
    }
    Ok(UpperTriangular::from_raw_unchecked(m, r))
}

/// Solves the lower-triangular system `Rᵀx = b` by forward substitution,
/// reading `R` through its transpose view.
pub fn solve_lower(r: &UpperTriangular, b: &[f64]) -> Result<Vec<f64>> {
    let m = r.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs dim {}",
            b.len(),
            m
        )));
    }
    let mut x = vec![0.0; m];
    for i in 0..m {
        let mut acc = b[i];
        for j in 0..i {
            acc -= r.get(j, i) * x[j];
        }
        let d = r.diag(i);
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        x[i] = acc / d;
    }
    Ok(x)
}

/// Solves the upper-triangular system `Rx = b` by back substitution.
pub fn solve_upper(r: &UpperTriangular, b: &[f64]) -> Result<Vec<f64>> {
    let m = r.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs dim {}",
            b.len(),
            m
        )));
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        for j in (i + 1)..m {
            acc -= r.get(i, j) * x[j];
        }
        let d = r.diag(i);
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        x[i] = acc / d;
    }
    Ok(x)
}
