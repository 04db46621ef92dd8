use super::{ObservationSet, SparseMatrix};
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, RngState};

/// Euclidean norm with scaled accumulation, so huge or tiny entries neither
/// overflow nor underflow.
pub fn frobenius(values: &[f64]) -> f64 {
    scaled_norm(values.iter().copied())
}

/// `||a - b||_2` without materializing the difference.
pub fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    scaled_norm(a.iter().zip(b).map(|(x, y)| x - y))
}

fn scaled_norm(values: impl Iterator<Item = f64>) -> f64 {
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for v in values {
        if v != 0.0 {
            let a = v.abs();
            if scale < a {
                let r = scale / a;
                ssq = 1.0 + ssq * r * r;
                scale = a;
            } else {
                let r = a / scale;
                ssq += r * r;
            }
        }
    }
    scale * ssq.sqrt()
}

/// Entries of `X = U diag(s) V^T` at every training position of `obs`, in
/// the order the training observations appear. Costs `O(|Phi| r)`.
pub fn project_observed(
    u: &DenseMatrix,
    s: &[f64],
    v: &DenseMatrix,
    obs: &ObservationSet,
) -> Result<Vec<f64>> {
    check_factors(u, s, v)?;
    let (m, n) = (u.rows(), v.rows());
    let mut proj = PatternProjector::default();
    proj.load(u, s, v)?;
    obs.train()
        .map(|o| {
            if o.row >= m || o.col >= n {
                return Err(Error::IndexOutOfRange {
                    row: o.row,
                    col: o.col,
                    rows: m,
                    cols: n,
                });
            }
            Ok(proj.entry(o.row, o.col))
        })
        .collect()
}

fn check_factors(u: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> Result<()> {
    if u.cols() != s.len() || v.cols() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "factor widths U:{} S:{} V:{}",
            u.cols(),
            s.len(),
            v.cols()
        )));
    }
    Ok(())
}

/// Reusable scratch for sampling a low-rank product on a fixed pattern.
/// Buffers grow to the largest rank seen and are then reused.
#[derive(Debug, Default)]
pub struct PatternProjector {
    rank: usize,
    us: Vec<f64>,
    vr: Vec<f64>,
}

impl PatternProjector {
    /// Stores `U diag(s)` and `V` row-major.
    pub fn load(&mut self, u: &DenseMatrix, s: &[f64], v: &DenseMatrix) -> Result<()> {
        check_factors(u, s, v)?;
        let r = s.len();
        self.rank = r;
        fill_row_major(&mut self.us, u, Some(s));
        fill_row_major(&mut self.vr, v, None);
        Ok(())
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let r = self.rank;
        if r == 0 {
            return 0.0;
        }
        dot(&self.us[i * r..(i + 1) * r], &self.vr[j * r..(j + 1) * r])
    }

    /// Writes the sampled entries for every stored position of `pattern`, in CSR order.
    pub fn project_into(&self, pattern: &SparseMatrix, out: &mut [f64]) -> Result<()> {
        if out.len() != pattern.nnz() {
            return Err(Error::DimensionMismatch(format!(
                "output length {} != nnz {}",
                out.len(),
                pattern.nnz()
            )));
        }
        let indptr = pattern.indptr();
        let indices = pattern.indices();
        for i in 0..pattern.rows() {
            for t in indptr[i]..indptr[i + 1] {
                out[t] = self.entry(i, indices[t]);
            }
        }
        Ok(())
    }
}

fn fill_row_major(buf: &mut Vec<f64>, m: &DenseMatrix, scale: Option<&[f64]>) {
    let (rows, r) = m.shape();
    buf.clear();
    buf.resize(rows * r, 0.0);
    for t in 0..r {
        let st = scale.map_or(1.0, |s| s[t]);
        for (i, x) in m.col(t).iter().enumerate() {
            buf[i * r + t] = x * st;
        }
    }
}

/// Iteration cap and relative tolerance of [`spectral_norm_est`].
pub const SPECTRAL_MAX_ITERS: usize = 200;
pub const SPECTRAL_REL_TOL: f64 = 1e-3;

/// `||A||_2` by power iteration on `A^T A`, stopping once successive
/// estimates agree to 1e-3 relative (or after 200 iterations) and returning
/// the larger of the last two estimates.
pub fn spectral_norm_est(a: &SparseMatrix, rng: &mut RngState) -> Result<f64> {
    if a.nnz() == 0 || a.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    let mut x = rng.gaussian_matrix(a.cols(), 1)?;
    normalize(&mut x);
    let mut prev: Option<f64> = None;
    let mut est = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let y = a.spmm(&x)?;
        est = y.frobenius_norm();
        if let Some(p) = prev {
            if (est - p).abs() <= SPECTRAL_REL_TOL * est {
                return Ok(est.max(p));
            }
        }
        let mut z = a.spmm_t(&y)?;
        if z.frobenius_norm() == 0.0 {
            return Ok(est.max(prev.unwrap_or(0.0)));
        }
        normalize(&mut z);
        x = z;
        prev = Some(est);
    }
    Ok(est.max(prev.unwrap_or(0.0)))
}

fn normalize(x: &mut DenseMatrix) {
    let n = x.frobenius_norm();
    if n > 0.0 {
        x.scale(1.0 / n);
    }
}
