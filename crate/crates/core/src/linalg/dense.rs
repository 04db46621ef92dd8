use rayon::prelude::*;

use crate::error::{Error, Result};

/// Work (in multiply-adds) below which kernels stay on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;

/// Column-major dense real matrix.
///
/// Matrices with zero columns are permitted only as the factors of an empty
/// (rank-0) decomposition; every public constructor taking user data requires
/// at least one row and one column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from column-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "dense matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense matrix data"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                out[i + j * rows] = data[i * cols + j];
            }
        }
        DenseMatrix::new(rows, cols, out)
    }

    pub(crate) fn from_row_major_unchecked(rows: usize, cols: usize, data: &[f64]) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                out[i + j * rows] = data[i * cols + j];
            }
        }
        DenseMatrix::from_parts(rows, cols, out)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Wraps column-major data without validation. Callers guarantee the length.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            debug_assert_eq!(c.len(), rows);
            data.extend_from_slice(c);
        }
        DenseMatrix {
            rows,
            cols: columns.len(),
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.data.len()];
        for j in 0..self.cols {
            for i in 0..self.rows {
                out[i * self.cols + j] = self.data[i + j * self.rows];
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_parts(self.cols, self.rows, self.to_row_major())
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::sparse::frobenius(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix::from_parts(self.rows, self.cols, data))
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseMatrix::from_parts(self.rows, self.cols, data))
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> DenseMatrix {
        assert!(start <= end && end <= self.cols);
        DenseMatrix::from_parts(
            self.rows,
            end - start,
            self.data[start * self.rows..end * self.rows].to_vec(),
        )
    }

    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        DenseMatrix::from_parts(self.rows, idx.len(), data)
    }

    /// Horizontal concatenation `[blocks[0], blocks[1], ...]`.
    pub fn hcat(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
        let rows = blocks
            .first()
            .map(|b| b.rows)
            .ok_or_else(|| Error::Empty("hcat of zero blocks".into()))?;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch("hcat row counts differ".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(DenseMatrix::from_parts(rows, cols, data))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let m = self.rows;
        let mut out = vec![0.0; m * other.cols];
        if m == 0 {
            return Ok(DenseMatrix::from_parts(m, other.cols, out));
        }
        let kernel = |(j, out_col): (usize, &mut [f64])| {
            let b = other.col(j);
            for (t, &bt) in b.iter().enumerate() {
                if bt != 0.0 {
                    axpy(bt, self.col(t), out_col);
                }
            }
        };
        if m * self.cols * other.cols >= PAR_THRESHOLD {
            out.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(DenseMatrix::from_parts(m, other.cols, out))
    }

    /// `self^T * other`.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "t_matmul ({}x{})^T * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = self.cols;
        let mut out = vec![0.0; n * other.cols];
        if n == 0 {
            return Ok(DenseMatrix::from_parts(n, other.cols, out));
        }
        let kernel = |(j, out_col): (usize, &mut [f64])| {
            let b = other.col(j);
            for (i, o) in out_col.iter_mut().enumerate() {
                *o = dot(self.col(i), b);
            }
        };
        if self.rows * n * other.cols >= PAR_THRESHOLD {
            out.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(n).enumerate().for_each(kernel);
        }
        Ok(DenseMatrix::from_parts(n, other.cols, out))
    }

    /// Symmetric Gram matrix `self^T * self`; only the upper triangle is computed.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| (0..=j).map(|i| dot(self.col(i), self.col(j))).collect())
            .collect();
        for (j, c) in cols.into_iter().enumerate() {
            for (i, v) in c.into_iter().enumerate() {
                g.data[i + j * n] = v;
                g.data[j + i * n] = v;
            }
        }
        g
    }

    /// Scales column `j` by `d[j]`.
    pub fn scale_columns(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.cols);
        for (j, &s) in d.iter().enumerate() {
            self.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
    }

    pub(crate) fn negate_column(&mut self, j: usize) {
        self.col_mut(j).iter_mut().for_each(|v| *v = -*v);
    }

    /// Reverses column order in place.
    pub(crate) fn reverse_columns(&mut self) {
        let r = self.rows;
        let c = self.cols;
        for j in 0..c / 2 {
            let (a, b) = self.data.split_at_mut((c - 1 - j) * r);
            a[j * r..(j + 1) * r].swap_with_slice(&mut b[..r]);
        }
    }

    /// Dense `U diag(s) V^T`.
    pub fn from_factors(u: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> Result<DenseMatrix> {
        if u.cols != s.len() || v.cols != s.len() {
            return Err(Error::DimensionMismatch("factor widths differ".into()));
        }
        let mut us = u.clone();
        us.scale_columns(s);
        // (U S) V^T: column j of the result is sum_t (US)_t * V[j, t].
        let vt = v.transpose();
        us.matmul(&vt)
    }
}

/// Dot product with four independent accumulators; order is fixed so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..n {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
