//! Randomized truncated SVD of sparse matrices: the basic QB scheme with
//! power iteration, the LU-accelerated power iteration (PI) variant, and the
//! block Krylov (BKI) variant.
//!
//! All three draw the same Gaussian test matrix for a given seed, so runs
//! with equal `(k, s, seed)` share `Omega`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dot_dd, eig_svd, lu_pl, Dd, oracle_svd, orth_dropping, DenseMatrix, RngState, SingularOrder, SvdResult,
    ORTH_RANK_TOL,
};
use crate::sparse::SparseMatrix;

pub const DEFAULT_OVERSAMPLING: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsvdParams {
    pub k: usize,
    pub s: usize,
    pub p: usize,
    pub seed: u64,
}

impl RsvdParams {
    pub fn new(k: usize, p: usize, seed: u64) -> Self {
        RsvdParams {
            k,
            s: DEFAULT_OVERSAMPLING,
            p,
            seed,
        }
    }

    pub fn with_oversampling(mut self, s: usize) -> Self {
        self.s = s;
        self
    }

    /// Sketch width `k + s`.
    pub fn width(&self) -> usize {
        self.k + self.s
    }

    /// Checks `k >= 1` and `blocks * (k + s) <= min(m, n)`.
    pub fn validate(&self, m: usize, n: usize, blocks: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let need = self.width() * blocks;
        if need > m.min(n) {
            return Err(Error::InvalidParameter(format!(
                "sketch needs {need} columns (k={} s={} blocks={blocks}) but min(m, n) = {}; reduce k, s or p",
                self.k,
                self.s,
                m.min(n)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Basic,
    Pi,
    Bki,
}

/// Orthonormal basis produced by a randomized SVD, kept for recycling.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub q: DenseMatrix,
    pub provenance: Provenance,
    /// Power parameter the basis was built with.
    pub power: usize,
    /// Number of numerical fallbacks taken while building it: sketch columns
    /// trimmed for rank, or the small SVD redone by the dense oracle.
    pub fallbacks: usize,
}

/// `Omega = randn(n, k + s)` for the given seed.
pub fn sketch_matrix(n: usize, params: &RsvdParams) -> Result<DenseMatrix> {
    RngState::new(params.seed).gaussian_matrix(n, params.width())
}

/// Seed for the `call`-th randomized SVD of a run seeded with `seed`.
pub fn call_seed(seed: u64, call: u64) -> u64 {
    // splitmix64 finalizer over the combined word.
    let mut z = seed ^ call.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Orthonormal basis of `range(x)` that drops numerically dependent columns.
/// Fails when fewer than `k` independent columns survive.
fn basis_of_rank(x: &DenseMatrix, k: usize, fallbacks: &mut usize, advice: &str) -> Result<DenseMatrix> {
    let (q, _) = orth_dropping(x, ORTH_RANK_TOL)?;
    if q.cols() < k {
        return Err(Error::RankDeficient {
            index: q.cols(),
            context: format!("sketch has numerical rank {} < k = {k}", q.cols()),
        }
        .with_advice(advice));
    }
    if q.cols() < x.cols() {
        *fallbacks += 1;
    }
    Ok(q)
}

fn is_rank_error(e: &Error) -> bool {
    matches!(e, Error::RankDeficient { .. })
}

/// Rank-`k` SVD of `A` restricted to `range(q)`: `B = Q^T A`,
/// `[V, S, U] = eig_svd(B^T)`, top-`k` window, `U = Q U`. When `B^T` is too
/// ill-conditioned for the Gram route the small factor goes through the
/// dense oracle instead and `fallbacks` is incremented.
pub(crate) fn svd_in_subspace(
    a: &SparseMatrix,
    q: &DenseMatrix,
    k: usize,
    fallbacks: &mut usize,
) -> Result<SvdResult> {
    let w = q.cols();
    if k > w {
        return Err(Error::InvalidParameter(format!(
            "rank {k} requested from a {w}-column subspace"
        )));
    }
    if k == 0 {
        return Ok(SvdResult::empty(a.rows(), a.cols()));
    }
    let bt = a.spmm_t(q)?;
    let (small_u, s, v, order) = match eig_svd(&bt) {
        // Ascending: the top k sit in the last k columns.
        Ok(r) => (r.v.columns(w - k, w), r.s[w - k..].to_vec(), r.u.columns(w - k, w), SingularOrder::Ascending),
        Err(e) if is_rank_error(&e) => {
            *fallbacks += 1;
            let r = oracle_svd(&bt)?;
            (r.v.columns(0, k), r.s[..k].to_vec(), r.u.columns(0, k), SingularOrder::Descending)
        }
        Err(e) => return Err(e),
    };
    let u = q.matmul(&small_u)?;
    let mut out = SvdResult::new(u, s, v, order)?.into_descending();
    out.normalize_signs();
    Ok(out)
}

/// Basic randomized SVD: orthonormalize after every product.
pub fn rsvd_basic(a: &SparseMatrix, params: &RsvdParams) -> Result<(SvdResult, Subspace)> {
    params.validate(a.rows(), a.cols(), 1)?;
    let advice = "reduce k";
    let k = params.k;
    let mut fallbacks = 0;
    let omega = sketch_matrix(a.cols(), params)?;
    let mut q = basis_of_rank(&a.spmm(&omega)?, k, &mut fallbacks, advice)?;
    for _ in 0..params.p {
        let g = basis_of_rank(&a.spmm_t(&q)?, k, &mut fallbacks, advice)?;
        q = basis_of_rank(&a.spmm(&g)?, k, &mut fallbacks, advice)?;
    }
    // svd(B) through svd(B^T), which is tall.
    let bt = a.spmm_t(&q)?;
    let r = oracle_svd(&bt)?;
    let u = q.matmul(&r.v.columns(0, k))?;
    let mut res = SvdResult::new(u, r.s[..k].to_vec(), r.u.columns(0, k), SingularOrder::Descending)?;
    res.normalize_signs();
    let sub = Subspace {
        q,
        provenance: Provenance::Basic,
        power: params.p,
        fallbacks,
    };
    Ok((res, sub))
}

/// Power iteration with LU bases between products and an eigSVD basis at the end.
pub fn rsvd_pi(a: &SparseMatrix, params: &RsvdParams) -> Result<(SvdResult, Subspace)> {
    params.validate(a.rows(), a.cols(), 1)?;
    let advice = "increase s or reduce k";
    let k = params.k;
    let mut fallbacks = 0;
    let omega = sketch_matrix(a.cols(), params)?;
    let mut q = a.spmm(&omega)?;
    for i in 0..=params.p {
        if i < params.p {
            q = match lu_pl(&q) {
                Ok(l) => l,
                Err(e) if is_rank_error(&e) => basis_of_rank(&q, k, &mut fallbacks, advice)?,
                Err(e) => return Err(e),
            };
            q = a.spmm(&a.spmm_t(&q)?)?;
        } else {
            q = match eig_svd(&q) {
                Ok(r) => r.u,
                Err(e) if is_rank_error(&e) => basis_of_rank(&q, k, &mut fallbacks, advice)?,
                Err(e) => return Err(e),
            };
        }
    }
    let res = svd_in_subspace(a, &q, k, &mut fallbacks).map_err(|e| e.with_advice(advice))?;
    let sub = Subspace {
        q,
        provenance: Provenance::Pi,
        power: params.p,
        fallbacks,
    };
    Ok((res, sub))
}

/// Block Krylov iteration: `H = [H_0, ..., H_p]` with
/// `H_i = lu(A A^T H_{i-1})`, `Q = orth(H)`, then the rank-k SVD in `range(Q)`.
/// The returned subspace carries the full `Q`.
pub fn rsvd_bki(a: &SparseMatrix, params: &RsvdParams) -> Result<(SvdResult, Subspace)> {
    params.validate(a.rows(), a.cols(), params.p + 1)?;
    let omega = sketch_matrix(a.cols(), params)?;
    bki_with_sketch(a, params.k, params.p, &omega)
}

pub(crate) fn bki_with_sketch(
    a: &SparseMatrix,
    k: usize,
    p: usize,
    omega: &DenseMatrix,
) -> Result<(SvdResult, Subspace)> {
    let advice = "reduce p or k";
    let mut fallbacks = 0;
    let lu_or_basis = |x: &DenseMatrix, need: usize, fb: &mut usize| match lu_pl(x) {
        Ok(l) => Ok(l),
        Err(e) if is_rank_error(&e) => basis_of_rank(x, need, fb, advice),
        Err(e) => Err(e),
    };
    let mut blocks = vec![lu_or_basis(&a.spmm(omega)?, k, &mut fallbacks)?];
    for _ in 1..=p {
        let prev = blocks.last().expect("at least one block");
        let next = a.spmm(&a.spmm_t(prev)?)?;
        // Later blocks may shrink, or vanish once the Krylov space is invariant.
        let h = lu_or_basis(&next, 0, &mut fallbacks)?;
        if h.cols() == 0 {
            break;
        }
        blocks.push(h);
    }
    let h = DenseMatrix::hcat(&blocks)?;
    let q = basis_of_rank(&h, k, &mut fallbacks, advice)?;
    let res = svd_in_subspace(a, &q, k, &mut fallbacks).map_err(|e| e.with_advice(advice))?;
    let sub = Subspace {
        q,
        provenance: Provenance::Bki,
        power: p,
        fallbacks,
    };
    Ok((res, sub))
}

/// `||A - U S V^T||_F / ||A||_F` through
/// `||A||^2 - 2 sum_t s_t u_t^T A v_t + sum_ab s_a s_b (U^T U)_ab (V^T V)_ab`,
/// never forming the dense residual. The terms cancel almost completely when
/// the factors are accurate, so the expansion is evaluated in double-double.
pub fn qb_error(a: &SparseMatrix, res: &SvdResult) -> Result<f64> {
    if res.rows() != a.rows() || res.cols() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "factors describe {}x{}, matrix is {}x{}",
            res.rows(),
            res.cols(),
            a.rows(),
            a.cols()
        )));
    }
    let norm_a = a.frobenius_norm();
    if norm_a == 0.0 {
        return Err(Error::Degenerate("relative error of a zero matrix".into()));
    }
    let r = res.rank();
    if r == 0 {
        return Ok(1.0);
    }
    let (u, v) = (&res.u, &res.v);
    let ur = u.to_row_major();
    let vr = v.to_row_major();
    let mut norm2 = Dd::default();
    let mut cross = vec![Dd::default(); r];
    for (i, j, x) in a.iter() {
        norm2 = norm2.add_prod(x, x);
        let (ui, vj) = (&ur[i * r..(i + 1) * r], &vr[j * r..(j + 1) * r]);
        for t in 0..r {
            // x * u_it * v_jt with the first product kept exact.
            let (p, e) = (x * ui[t], x.mul_add(ui[t], -(x * ui[t])));
            cross[t] = cross[t].add(Dd { hi: p, lo: e }.mul_f64(vj[t]));
        }
    }
    let mut total = norm2;
    for t in 0..r {
        total = total.add(cross[t].mul_f64(-2.0 * res.s[t]));
    }
    for b in 0..r {
        for a_ in 0..=b {
            let g = dot_dd(u.col(a_), u.col(b)).mul(dot_dd(v.col(a_), v.col(b)));
            let w = if a_ == b { 1.0 } else { 2.0 };
            total = total.add(g.mul_f64(res.s[a_] * w).mul_f64(res.s[b]));
        }
    }
    Ok(total.to_f64().max(0.0).sqrt() / norm_a)
}
