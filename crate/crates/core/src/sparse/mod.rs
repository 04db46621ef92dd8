//! CSR storage, the sampled-entry set Phi, and the kernels the randomized
//! algorithms and the SVT loop spend their time in.

mod csr;
mod kernels;
mod mtx;
mod observations;

pub use csr::{spmm, spmm_t, SparseMatrix};
pub use kernels::{
    frobenius, frobenius_diff, project_observed, spectral_norm_est, PatternProjector,
    SPECTRAL_MAX_ITERS, SPECTRAL_REL_TOL,
};
pub use mtx::{
    read_dense_matrix_market, read_matrix_market, read_matrix_market_from,
    write_dense_matrix_market, write_matrix_market, write_matrix_market_to,
};
pub use observations::{ColdStart, Observation, ObservationSet, Split};
