use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, DenseMatrix};

/// CSR matrix whose sparsity pattern is semantic: explicit zeros are kept,
/// since the pattern encodes the observed set in completion problems.
///
/// A column-oriented index into the CSR arrays is built on first use by
/// [`SparseMatrix::spmm_t`]; it stores positions rather than values, so it stays
/// valid across [`SparseMatrix::update_pattern_values`].
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    transpose: OnceLock<TransposeIndex>,
}

#[derive(Debug, Clone)]
struct TransposeIndex {
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    pos: Vec<usize>,
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.indptr == other.indptr
            && self.indices == other.indices
            && self.values == other.values
    }
}

impl SparseMatrix {
    /// Validated CSR construction.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "sparse matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(Error::InvalidDimensions("row offsets malformed".into()));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDimensions("row offsets not monotone".into()));
        }
        let nnz = indptr[rows];
        if indices.len() != nnz || values.len() != nnz {
            return Err(Error::DimensionMismatch(format!(
                "nnz {nnz} vs {} indices / {} values",
                indices.len(),
                values.len()
            )));
        }
        for i in 0..rows {
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidDimensions(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if let Some(&j) = row.last() {
                if j >= cols {
                    return Err(Error::IndexOutOfRange { row: i, col: j, rows, cols });
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse values"));
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
            transpose: OnceLock::new(),
        })
    }

    /// Builds from `(row, col, value)` triplets. Duplicate positions resolve
    /// to the last occurrence; the number of dropped duplicates is returned.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<(Self, usize)> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "sparse matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::IndexOutOfRange { row: i, col: j, rows, cols });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse triplet value"));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // Stable sort keeps input order among duplicates, so the last one is kept.
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut dups = 0;
        let mut last: Option<(usize, usize)> = None;
        for &t in &order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") = v;
                dups += 1;
                continue;
            }
            last = Some((i, j));
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok((
            SparseMatrix {
                rows,
                cols,
                indptr,
                indices,
                values,
                transpose: OnceLock::new(),
            },
            dups,
        ))
    }

    /// Every entry of `d` becomes a stored entry, zeros included.
    pub fn from_dense(d: &DenseMatrix) -> Self {
        let (m, n) = d.shape();
        let indptr = (0..=m).map(|i| i * n).collect();
        let indices = (0..m).flat_map(|_| 0..n).collect();
        let values = d.to_row_major();
        SparseMatrix {
            rows: m,
            cols: n,
            indptr,
            indices,
            values,
            transpose: OnceLock::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix::from_csr(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
            .expect("identity is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column indices, values)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// Iterator over `(row, col, value)` in CSR order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Same pattern with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for pattern with {} entries",
                values.len(),
                self.nnz()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse values"));
        }
        Ok(SparseMatrix {
            values,
            ..self.clone()
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        SparseMatrix {
            values: self.values.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::frobenius(&self.values)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            d.set(i, j, v);
        }
        d
    }

    /// Adds `delta[t]` to the `t`-th stored value. Pattern and storage are untouched.
    pub fn update_pattern_values(&mut self, delta: &[f64]) -> Result<()> {
        if delta.len() != self.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "delta length {} != nnz {}",
                delta.len(),
                self.values.len()
            )));
        }
        for (v, d) in self.values.iter_mut().zip(delta) {
            *v += d;
        }
        Ok(())
    }

    /// In-place `values += step * (target - current)`.
    pub fn add_scaled_difference(&mut self, step: f64, target: &[f64], current: &[f64]) -> Result<()> {
        let nnz = self.values.len();
        if target.len() != nnz || current.len() != nnz {
            return Err(Error::DimensionMismatch(format!(
                "difference operands {}/{} for nnz {nnz}",
                target.len(),
                current.len()
            )));
        }
        for ((v, t), c) in self.values.iter_mut().zip(target).zip(current) {
            *v += step * (t - c);
        }
        Ok(())
    }

    fn transpose_index(&self) -> &TransposeIndex {
        self.transpose.get_or_init(|| {
            let mut colptr = vec![0usize; self.cols + 1];
            for &j in &self.indices {
                colptr[j + 1] += 1;
            }
            for j in 0..self.cols {
                colptr[j + 1] += colptr[j];
            }
            let mut next = colptr.clone();
            let mut rowidx = vec![0usize; self.nnz()];
            let mut pos = vec![0usize; self.nnz()];
            for i in 0..self.rows {
                for t in self.indptr[i]..self.indptr[i + 1] {
                    let j = self.indices[t];
                    let slot = next[j];
                    rowidx[slot] = i;
                    pos[slot] = t;
                    next[j] += 1;
                }
            }
            TransposeIndex { colptr, rowidx, pos }
        })
    }

    /// `A * X`. Each output row accumulates its entries in CSR order.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "spmm {}x{} * {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let k = x.cols();
        let xr = x.to_row_major();
        let mut out = vec![0.0; self.rows * k];
        if k > 0 {
            out.par_chunks_mut(k)
                .with_min_len(256)
                .enumerate()
                .for_each(|(i, acc)| {
                    for t in self.indptr[i]..self.indptr[i + 1] {
                        let j = self.indices[t];
                        axpy(self.values[t], &xr[j * k..(j + 1) * k], acc);
                    }
                });
        }
        Ok(DenseMatrix::from_row_major_unchecked(self.rows, k, &out))
    }

    /// `A^T * X` through the transpose index; no transposed copy is materialized.
    pub fn spmm_t(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "spmm_t ({}x{})^T * {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let k = x.cols();
        let tix = self.transpose_index();
        let xr = x.to_row_major();
        let mut out = vec![0.0; self.cols * k];
        if k > 0 {
            out.par_chunks_mut(k)
                .with_min_len(256)
                .enumerate()
                .for_each(|(j, acc)| {
                    for s in tix.colptr[j]..tix.colptr[j + 1] {
                        let i = tix.rowidx[s];
                        axpy(self.values[tix.pos[s]], &xr[i * k..(i + 1) * k], acc);
                    }
                });
        }
        Ok(DenseMatrix::from_row_major_unchecked(self.cols, k, &out))
    }
}

/// Free-function form of [`SparseMatrix::spmm`].
pub fn spmm(a: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    a.spmm(x)
}

/// Free-function form of [`SparseMatrix::spmm_t`].
pub fn spmm_t(a: &SparseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    a.spmm_t(x)
}
