//! Dense building blocks for the randomized algorithms: seeded Gaussian
//! sampling, QR and LU bases, a Jacobi symmetric eigensolver, the Gram-based
//! economic SVD, and a one-sided Jacobi SVD used as ground truth.

mod dd;
mod dense;
mod eig;
mod lu;
mod qr;
mod rng;
mod svd;

pub(crate) use dd::{dot_dd, Dd};
pub use dense::{axpy, dot, DenseMatrix};
pub use eig::{sym_eig, QL_MAX_ITERS};
pub use lu::{lu_pl, LU_PIVOT_TOL};
pub use qr::{orth, orth_dropping, orth_with_tol, ORTH_RANK_TOL};
pub use rng::RngState;
pub use svd::{
    eig_svd, oracle_singular_values, oracle_svd, oracle_svd_capped, SingularOrder, SvdResult,
    DEFAULT_ORACLE_CAP, EIG_SVD_RANK_TOL, ONE_SIDED_MAX_SWEEPS,
};

/// `gaussian_matrix(rng, rows, cols)` as a free function.
pub fn gaussian_matrix(rng: &mut RngState, rows: usize, cols: usize) -> crate::Result<DenseMatrix> {
    rng.gaussian_matrix(rows, cols)
}
