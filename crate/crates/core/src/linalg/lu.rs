use super::dense::{axpy, DenseMatrix};
use crate::error::{Error, Result};

/// Pivot magnitude, relative to `max|X|`, treated as zero.
pub const LU_PIVOT_TOL: f64 = 1e-14;

/// Partial-pivoted LU of `x` (m x n, m >= n), returning the permuted unit
/// lower-trapezoidal factor `P^T L`.
///
/// `P^T L` spans the same column space as `x` when `x` has full column rank,
/// which is all the power iteration needs from it.
pub fn lu_pl(x: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::InvalidDimensions(format!(
            "LU basis needs rows >= cols, got {m}x{n}"
        )));
    }
    x.ensure_finite("lu input")?;
    let threshold = LU_PIVOT_TOL * x.max_abs();
    let mut a = x.clone();
    let mut perm: Vec<usize> = (0..m).collect();

    for j in 0..n {
        let col = a.col(j);
        let (p, pivot) = col[j..]
            .iter()
            .enumerate()
            .fold((j, 0.0f64), |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i + j, v.abs())
                } else {
                    (bi, bv)
                }
            });
        if !(pivot > threshold) {
            return Err(Error::RankDeficient {
                index: j,
                context: format!("zero LU pivot {pivot:.3e} (threshold {threshold:.3e})"),
            });
        }
        if p != j {
            perm.swap(p, j);
            for c in 0..n {
                let data = a.col_mut(c);
                data.swap(p, j);
            }
        }
        let inv = 1.0 / a.get(j, j);
        a.col_mut(j)[j + 1..].iter_mut().for_each(|v| *v *= inv);

        let data = a.as_mut_slice();
        let (head, tail) = data.split_at_mut((j + 1) * m);
        let l = &head[j * m + j + 1..(j + 1) * m];
        for c in tail.chunks_mut(m) {
            let u = c[j];
            if u != 0.0 {
                axpy(-u, l, &mut c[j + 1..]);
            }
        }
    }

    let mut out = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let src = a.col(j);
        let dst = out.col_mut(j);
        dst[perm[j]] = 1.0;
        for i in j + 1..m {
            dst[perm[i]] = src[i];
        }
    }
    Ok(out)
}
