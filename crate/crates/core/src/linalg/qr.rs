use rayon::prelude::*;

use super::dense::{axpy, dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::frobenius;

/// Relative column-norm collapse that marks a matrix as rank deficient in [`orth`].
pub const ORTH_RANK_TOL: f64 = 1e-12;

/// Compact Householder QR: reflectors stored below the diagonal, `R` on and above it.
pub(crate) struct HouseholderQr {
    factors: DenseMatrix,
    tau: Vec<f64>,
}

impl HouseholderQr {
    /// Factors `x` (m x n, m >= n). With `tol = Some(t)`, fails when a
    /// diagonal entry of `R` drops below `t * ||x||_F`.
    pub(crate) fn factor(x: &DenseMatrix, tol: Option<f64>) -> Result<Self> {
        let (m, n) = x.shape();
        if m < n {
            return Err(Error::InvalidDimensions(format!(
                "QR needs rows >= cols, got {m}x{n}"
            )));
        }
        let threshold = tol.map(|t| t * x.frobenius_norm());
        let mut a = x.clone();
        let mut tau = vec![0.0; n];
        for j in 0..n {
            let norm = frobenius(&a.col(j)[j..]);
            if let Some(th) = threshold {
                if !(norm > th) {
                    return Err(Error::RankDeficient {
                        index: j,
                        context: format!(
                            "column norm {norm:.3e} collapsed below {th:.3e} during orthonormalization"
                        ),
                    });
                }
            }
            if norm == 0.0 {
                tau[j] = 0.0;
                continue;
            }
            tau[j] = reflect(&mut a, j, j, j + 1..n, norm);
        }
        Ok(HouseholderQr { factors: a, tau })
    }

    /// Thin `Q` (m x n).
    pub(crate) fn thin_q(&self) -> DenseMatrix {
        let (m, n) = self.factors.shape();
        let mut q = DenseMatrix::zeros(m, n);
        for j in 0..n {
            q.set(j, j, 1.0);
        }
        for j in (0..n).rev() {
            let t = self.tau[j];
            if t == 0.0 {
                continue;
            }
            let v_tail = &self.factors.col(j)[j + 1..];
            let apply = |c: &mut [f64]| {
                let seg = &mut c[j..];
                let w = seg[0] + dot(v_tail, &seg[1..]);
                let tw = t * w;
                seg[0] -= tw;
                axpy(-tw, v_tail, &mut seg[1..]);
            };
            // Columns left of j are still unit vectors with zeros in rows >= j.
            let body = &mut q.as_mut_slice()[j * m..];
            if (n - j) * (m - j) >= 1 << 15 {
                body.par_chunks_mut(m).for_each(apply);
            } else {
                body.chunks_mut(m).for_each(apply);
            }
        }
        q
    }

    /// Upper-triangular `R` (n x n).
    pub(crate) fn r(&self) -> DenseMatrix {
        let n = self.factors.cols();
        DenseMatrix::from_fn(n, n, |i, j| if i <= j { self.factors.get(i, j) } else { 0.0 })
    }
}

/// Turns column `col` of `a` into a Householder reflector acting on rows
/// `row..`, stores it LAPACK-style, and applies it to the columns in `rest`.
/// `norm` is the Euclidean norm of `a[row.., col]`. Returns `tau`.
fn reflect(a: &mut DenseMatrix, row: usize, col: usize, rest: std::ops::Range<usize>, norm: f64) -> f64 {
    let m = a.rows();
    let (head, tail) = a.as_mut_slice().split_at_mut((col + 1) * m);
    let c = &mut head[col * m + row..(col + 1) * m];
    let alpha = c[0];
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let t = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    c[1..].iter_mut().for_each(|v| *v *= scale);
    c[0] = beta;
    let v_tail: &[f64] = &c[1..];
    let apply = |c: &mut [f64]| {
        let seg = &mut c[row..];
        let w = seg[0] + dot(v_tail, &seg[1..]);
        let tw = t * w;
        seg[0] -= tw;
        axpy(-tw, v_tail, &mut seg[1..]);
    };
    let body = &mut tail[(rest.start - col - 1) * m..(rest.end - col - 1) * m];
    if rest.len() * (m - row) >= 1 << 15 {
        body.par_chunks_mut(m).for_each(apply);
    } else {
        body.chunks_mut(m).for_each(apply);
    }
    t
}

/// Orthonormal basis of `range(x)` via Householder QR.
///
/// Fails with [`Error::RankDeficient`] when a column norm collapses below
/// `1e-12 * ||x||_F` during the factorization.
pub fn orth(x: &DenseMatrix) -> Result<DenseMatrix> {
    orth_with_tol(x, ORTH_RANK_TOL)
}

pub fn orth_with_tol(x: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    x.ensure_finite("orth input")?;
    Ok(HouseholderQr::factor(x, Some(tol))?.thin_q())
}

/// Like [`orth_with_tol`], but a column whose remaining norm collapses below
/// `tol * ||x||_F` is skipped instead of failing. Returns the basis together
/// with the indices of the columns that contributed to it, so the width of
/// the basis is the numerical rank found by the greedy left-to-right scan.
/// Accepts wide inputs; at most `rows` columns are kept.
pub fn orth_dropping(x: &DenseMatrix, tol: f64) -> Result<(DenseMatrix, Vec<usize>)> {
    x.ensure_finite("orth input")?;
    let (m, n) = x.shape();
    let threshold = tol * x.frobenius_norm();
    let mut a = x.clone();
    let mut kept = Vec::new();
    let mut tau = Vec::new();
    for j in 0..n {
        let r = kept.len();
        if r == m {
            break;
        }
        let norm = frobenius(&a.col(j)[r..]);
        if !(norm > threshold) {
            continue;
        }
        tau.push(reflect(&mut a, r, j, j + 1..n, norm));
        kept.push(j);
    }
    // Column t of the compacted factors holds the reflector anchored at row t.
    let qr = HouseholderQr {
        factors: a.select_columns(&kept),
        tau,
    };
    Ok((qr.thin_q(), kept))
}
