use crate::error::{Error, Result};
use crate::linalg::{eig_svd, DenseMatrix, SingularOrder, SvdResult};
use crate::rsvd::{svd_in_subspace, Subspace};
use crate::sparse::SparseMatrix;

/// Rank-`k` SVD of `y` inside a cached rSVD basis: the final stage of
/// rSVD-BKI (`B = Q^T Y`, eigSVD of `B^T`, top-`k` window) without a new
/// sketch. Fails when `k` exceeds the cached width; the caller must then
/// build a fresh basis.
pub fn recycle_q(cached: &Subspace, y: &SparseMatrix, k: usize) -> Result<SvdResult> {
    let mut fallbacks = 0;
    recycle_q_counted(cached, y, k, &mut fallbacks)
}

pub(crate) fn recycle_q_counted(
    cached: &Subspace,
    y: &SparseMatrix,
    k: usize,
    fallbacks: &mut usize,
) -> Result<SvdResult> {
    if cached.q.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cached basis has {} rows, matrix has {}",
            cached.q.rows(),
            y.rows()
        )));
    }
    if k > cached.q.cols() {
        return Err(Error::InvalidParameter(format!(
            "rank {k} exceeds cached basis width {}; refresh the subspace",
            cached.q.cols()
        )));
    }
    svd_in_subspace(y, &cached.q, k, fallbacks)
}

/// SVD of `y` projected on the previous left singular vectors:
/// `B = U_prev^T Y`, `[V, S, U] = eig_svd(B^T)`, `U = U_prev U`.
/// Returns every triplet of the projection, descending.
pub fn recycle_u(u_prev: &DenseMatrix, y: &SparseMatrix) -> Result<SvdResult> {
    if u_prev.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "U has {} rows, matrix has {}",
            u_prev.rows(),
            y.rows()
        )));
    }
    let w = u_prev.cols();
    if w == 0 {
        return Ok(SvdResult::empty(y.rows(), y.cols()));
    }
    let bt = y.spmm_t(u_prev)?;
    if bt.max_abs() == 0.0 {
        // Y is orthogonal to range(U_prev): every projected singular value is zero.
        let v = DenseMatrix::from_fn(y.cols(), w, |i, j| if i == j { 1.0 } else { 0.0 });
        return SvdResult::new(u_prev.clone(), vec![0.0; w], v, SingularOrder::Descending);
    }
    let r = eig_svd(&bt).map_err(|e| e.with_advice("refresh the subspace with a new rSVD-BKI"))?;
    let u = u_prev.matmul(&r.v)?;
    let mut out = SvdResult::new(u, r.s, r.u, SingularOrder::Ascending)?.into_descending();
    out.normalize_signs();
    Ok(out)
}
