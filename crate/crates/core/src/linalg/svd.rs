use rayon::prelude::*;

use super::dense::{dot, DenseMatrix};
use super::eig::sym_eig;
use super::qr::HouseholderQr;
use crate::error::{Error, Result};

/// Gram eigenvalues at or below this fraction of the largest one make
/// [`eig_svd`] report rank deficiency.
pub const EIG_SVD_RANK_TOL: f64 = 1e-12;

/// Largest `min(m, n)` the dense oracle accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Sweep cap for the one-sided Jacobi SVD.
pub const ONE_SIDED_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularOrder {
    Ascending,
    Descending,
}

/// Thin SVD `A ~ U diag(s) V^T` with `U` m x r and `V` n x r.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
    pub order: SingularOrder,
}

impl SvdResult {
    pub fn new(u: DenseMatrix, s: Vec<f64>, v: DenseMatrix, order: SingularOrder) -> Result<Self> {
        if u.cols() != s.len() || v.cols() != s.len() {
            return Err(Error::DimensionMismatch(format!(
                "SVD factor widths U:{} S:{} V:{}",
                u.cols(),
                s.len(),
                v.cols()
            )));
        }
        if s.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidParameter("singular values must be finite and >= 0".into()));
        }
        let sorted = match order {
            SingularOrder::Ascending => s.windows(2).all(|w| w[0] <= w[1]),
            SingularOrder::Descending => s.windows(2).all(|w| w[0] >= w[1]),
        };
        if !sorted {
            return Err(Error::InvalidParameter(format!("singular values not {order:?}")));
        }
        Ok(SvdResult { u, s, v, order })
    }

    /// Rank-0 result for an `m x n` matrix.
    pub fn empty(m: usize, n: usize) -> Self {
        SvdResult {
            u: DenseMatrix::zeros(m, 0),
            s: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
            order: SingularOrder::Descending,
        }
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    pub fn into_descending(mut self) -> Self {
        if self.order == SingularOrder::Ascending {
            self.u.reverse_columns();
            self.v.reverse_columns();
            self.s.reverse();
            self.order = SingularOrder::Descending;
        }
        self
    }

    /// Leading `k` triplets of a descending result.
    pub fn truncated(&self, k: usize) -> SvdResult {
        assert_eq!(self.order, SingularOrder::Descending, "truncate needs descending order");
        let k = k.min(self.rank());
        SvdResult {
            u: self.u.columns(0, k),
            s: self.s[..k].to_vec(),
            v: self.v.columns(0, k),
            order: SingularOrder::Descending,
        }
    }

    /// Dense `U diag(s) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        DenseMatrix::from_factors(&self.u, &self.s, &self.v).expect("consistent factor widths")
    }

    /// Makes the first significant entry of every right singular vector
    /// non-negative, flipping the matching left vector with it.
    pub fn normalize_signs(&mut self) {
        for j in 0..self.rank() {
            let flip = self
                .v
                .col(j)
                .iter()
                .find(|x| x.abs() > 1e-10)
                .is_some_and(|x| *x < 0.0);
            if flip {
                self.v.negate_column(j);
                self.u.negate_column(j);
            }
        }
    }
}

/// Economic SVD of a tall matrix through the eigendecomposition of its Gram
/// matrix. Singular values come out ascending.
pub fn eig_svd(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidDimensions(format!(
            "eig_svd needs rows >= cols, got {m}x{n}"
        )));
    }
    a.ensure_finite("eig_svd input")?;
    let gram = a.gram();
    let (v, d) = sym_eig(&gram)?;
    let dmax = d.last().copied().unwrap_or(0.0).max(0.0);
    for (j, &dj) in d.iter().enumerate() {
        if !(dj > EIG_SVD_RANK_TOL * dmax) || dmax == 0.0 {
            return Err(Error::RankDeficient {
                index: j,
                context: format!(
                    "Gram eigenvalue {dj:.3e} <= {EIG_SVD_RANK_TOL:e} x largest {dmax:.3e}"
                ),
            });
        }
    }
    let s: Vec<f64> = d.iter().map(|x| x.max(0.0).sqrt()).collect();
    let mut u = a.matmul(&v)?;
    let inv: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
    u.scale_columns(&inv);
    let mut out = SvdResult {
        u,
        s,
        v,
        order: SingularOrder::Ascending,
    };
    out.normalize_signs();
    Ok(out)
}

/// Full economic SVD by one-sided Jacobi rotations, descending.
///
/// Serves as ground truth; refuses inputs with `min(m, n) > DEFAULT_ORACLE_CAP`.
pub fn oracle_svd(a: &DenseMatrix) -> Result<SvdResult> {
    oracle_svd_capped(a, DEFAULT_ORACLE_CAP)
}

pub fn oracle_svd_capped(a: &DenseMatrix, cap: usize) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m.min(n) > cap {
        return Err(Error::SizeCap { dim: m.min(n), cap });
    }
    a.ensure_finite("oracle_svd input")?;
    if m < n {
        let t = oracle_tall(&a.transpose(), true)?;
        let mut out = SvdResult {
            u: t.v.expect("vectors requested"),
            s: t.s,
            v: t.u,
            order: SingularOrder::Descending,
        };
        out.normalize_signs();
        Ok(out)
    } else {
        let t = oracle_tall(a, true)?;
        let mut out = SvdResult {
            u: t.u,
            s: t.s,
            v: t.v.expect("vectors requested"),
            order: SingularOrder::Descending,
        };
        out.normalize_signs();
        Ok(out)
    }
}

/// Singular values only (descending), skipping right-vector accumulation.
pub fn oracle_singular_values(a: &DenseMatrix, cap: usize) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if m.min(n) > cap {
        return Err(Error::SizeCap { dim: m.min(n), cap });
    }
    a.ensure_finite("oracle input")?;
    let t = if m < n {
        oracle_tall(&a.transpose(), false)?
    } else {
        oracle_tall(a, false)?
    };
    Ok(t.s)
}

struct TallSvd {
    u: DenseMatrix,
    s: Vec<f64>,
    v: Option<DenseMatrix>,
}

fn oracle_tall(a: &DenseMatrix, want_v: bool) -> Result<TallSvd> {
    let (m, n) = a.shape();
    // Rotations act on the n x n triangular factor when the input is tall.
    let (q, work) = if m > n {
        let qr = HouseholderQr::factor(a, None)?;
        (Some(qr.thin_q()), qr.r())
    } else {
        (None, a.clone())
    };
    let wrows = work.rows();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| work.col(j).to_vec()).collect();
    let mut v: Option<Vec<Vec<f64>>> = want_v.then(|| {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    });
    one_sided_jacobi(&mut w, v.as_mut(), wrows)?;

    let norms: Vec<f64> = w.iter().map(|c| crate::sparse::frobenius(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let smax = norms[order[0]];
    let zero_tol = smax * (m.max(n) as f64) * f64::EPSILON;

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut ucols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            (norms[j] > zero_tol && norms[j] > 0.0)
                .then(|| w[j].iter().map(|x| x / norms[j]).collect())
        })
        .collect();
    complete_orthonormal(&mut ucols, wrows);
    let ucols: Vec<Vec<f64>> = ucols.into_iter().map(|c| c.expect("completed")).collect();
    let u_small = DenseMatrix::from_columns(wrows, &ucols);
    let u = match q {
        Some(q) => q.matmul(&u_small)?,
        None => u_small,
    };
    let v = v.map(|cols| {
        let ordered: Vec<Vec<f64>> = order.iter().map(|&j| cols[j].clone()).collect();
        DenseMatrix::from_columns(n, &ordered)
    });
    Ok(TallSvd { u, s, v })
}

/// Hestenes one-sided Jacobi with round-robin pair ordering. Pairs within a
/// round are disjoint, so they may run in parallel without changing results.
fn one_sided_jacobi(
    w: &mut [Vec<f64>],
    mut v: Option<&mut Vec<Vec<f64>>>,
    rows: usize,
) -> Result<()> {
    let n = w.len();
    if n < 2 {
        return Ok(());
    }
    let tol = rows.max(1) as f64 * f64::EPSILON;
    // Columns below eps * ||A||_F are numerically zero; rotating them only chases noise.
    let fro2: f64 = w.iter().map(|c| dot(c, c)).sum();
    let floor = f64::EPSILON * f64::EPSILON * fro2;
    let size = n + n % 2;
    let mut slots: Vec<usize> = (0..size).collect();

    for _sweep in 0..ONE_SIDED_MAX_SWEEPS {
        let mut rotated = false;
        for _round in 0..size - 1 {
            let pairs: Vec<(usize, usize)> = (0..size / 2)
                .map(|i| {
                    let (a, b) = (slots[i], slots[size - 1 - i]);
                    (a.min(b), a.max(b))
                })
                .filter(|&(_, b)| b < n)
                .collect();

            let mut jobs: Vec<PairJob> = pairs
                .iter()
                .map(|&(a, b)| PairJob {
                    a,
                    b,
                    wa: std::mem::take(&mut w[a]),
                    wb: std::mem::take(&mut w[b]),
                    va: v.as_mut().map(|vv| std::mem::take(&mut vv[a])),
                    vb: v.as_mut().map(|vv| std::mem::take(&mut vv[b])),
                    rotated: false,
                })
                .collect();
            if rows * jobs.len() >= 1 << 14 {
                jobs.par_iter_mut().for_each(|job| job.run(tol, floor));
            } else {
                jobs.iter_mut().for_each(|job| job.run(tol, floor));
            }
            for job in jobs {
                rotated |= job.rotated;
                w[job.a] = job.wa;
                w[job.b] = job.wb;
                if let Some(vv) = v.as_mut() {
                    vv[job.a] = job.va.expect("v taken");
                    vv[job.b] = job.vb.expect("v taken");
                }
            }
            slots[1..].rotate_right(1);
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        routine: "one-sided Jacobi SVD",
        sweeps: ONE_SIDED_MAX_SWEEPS,
    })
}

struct PairJob {
    a: usize,
    b: usize,
    wa: Vec<f64>,
    wb: Vec<f64>,
    va: Option<Vec<f64>>,
    vb: Option<Vec<f64>>,
    rotated: bool,
}

impl PairJob {
    fn run(&mut self, tol: f64, floor: f64) {
        let alpha = dot(&self.wa, &self.wa);
        let beta = dot(&self.wb, &self.wb);
        let gamma = dot(&self.wa, &self.wb);
        if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
            return;
        }
        let zeta = (beta - alpha) / (2.0 * gamma);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        rotate(&mut self.wa, &mut self.wb, c, s);
        if let (Some(va), Some(vb)) = (self.va.as_mut(), self.vb.as_mut()) {
            rotate(va, vb, c, s);
        }
        self.rotated = true;
    }
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills `None` slots with unit vectors orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], rows: usize) {
    let mut candidate = 0;
    for slot in 0..cols.len() {
        if cols[slot].is_some() {
            continue;
        }
        while candidate < rows {
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().flatten() {
                    let proj = dot(c, &e);
                    e.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let norm = crate::sparse::frobenius(&e);
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                cols[slot] = Some(e);
                break;
            }
        }
        assert!(cols[slot].is_some(), "orthonormal completion ran out of candidates");
    }
}
