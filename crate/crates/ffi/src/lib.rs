//! C ABI for fastsvt.
//!
//! Every fallible call returns a [`FastsvtStatus`]; on failure the message is
//! available from [`fastsvt_last_error_message`] on the same thread. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `_free` function. Dense outputs are written row-major into caller buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastsvt::completion::{svt_fast, svt_reference, Backend, CompletionResult, Strategy, SvtParams, Workload};
use fastsvt::linalg::{oracle_svd_capped, DenseMatrix, SvdResult};
use fastsvt::rsvd::{qb_error, rsvd_basic, rsvd_bki, rsvd_pi, RsvdParams};
use fastsvt::sparse::{read_matrix_market, ObservationSet, SparseMatrix};
use fastsvt::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsvtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid parameter or size cap.
    Config = 2,
    /// Malformed input: dimensions, indices, parse or I/O errors.
    Data = 3,
    /// Rank deficiency, non-finite values or a solver that did not converge.
    Numerical = 4,
    /// Output buffer shorter than required; the message names the length.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsvtRsvdAlgo {
    Basic = 0,
    PowerIteration = 1,
    BlockKrylov = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsvtStrategy {
    None = 0,
    ReuseQ = 1,
    ReuseU = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsvtWorkload {
    Image = 0,
    Ratings = 1,
    Generic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastsvtSolver {
    /// Reference SVT with the dense oracle SVD.
    ReferenceOracle = 0,
    /// Reference SVT with rSVD-BKI and no recycling.
    ReferenceBki = 1,
    /// Fast SVT with the configured recycling strategy.
    Fast = 2,
}

/// SVT parameters. `tau`, `delta` and `delta_decay` use their defaults when
/// zero, negative or NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FastsvtSvtParams {
    pub tau: f64,
    pub delta: f64,
    pub delta_decay: f64,
    pub l: usize,
    pub epsilon: f64,
    pub i_max: usize,
    pub i_reuse: usize,
    pub q_reuse: usize,
    pub strategy: FastsvtStrategy,
    pub p0: usize,
    pub p_min: usize,
    pub adaptive_power: bool,
    pub s: usize,
    pub seed: u64,
    pub oracle_cap: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FastsvtCompletionInfo {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub tau: f64,
    pub delta: f64,
}

pub struct FastsvtSparse(SparseMatrix);

pub struct FastsvtSvd(SvdResult);

pub struct FastsvtCompletion(CompletionResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FastsvtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.class() {
            ErrorClass::Config => FastsvtStatus::Config,
            ErrorClass::Data => FastsvtStatus::Data,
            ErrorClass::Numerical => FastsvtStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FastsvtStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FastsvtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FastsvtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            FastsvtStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len < need {
        return Err(Failure(
            FastsvtStatus::BufferTooSmall,
            format!("{what} needs {need} doubles, got {len}"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn triplets(
    nnz: usize,
    row_idx: *const usize,
    col_idx: *const usize,
    values: *const f64,
) -> Result<Vec<(usize, usize, f64)>, Failure> {
    let r = slice(row_idx, nnz, "row_idx")?;
    let c = slice(col_idx, nnz, "col_idx")?;
    let v = slice(values, nnz, "values")?;
    Ok(r.iter().zip(c).zip(v).map(|((&i, &j), &x)| (i, j, x)).collect())
}

fn copy_row_major(m: &DenseMatrix, out: &mut [f64]) {
    let cols = m.cols();
    for i in 0..m.rows() {
        for j in 0..cols {
            out[i * cols + j] = m.get(i, j);
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fastsvt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next fastsvt call on this thread.
#[no_mangle]
pub extern "C" fn fastsvt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a CSR matrix from `nnz` zero-based triplets; repeated positions keep the last value.
///
/// # Safety
/// The index and value arrays must hold `nnz` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_sparse_from_triplets(
    rows: usize,
    cols: usize,
    nnz: usize,
    row_idx: *const usize,
    col_idx: *const usize,
    values: *const f64,
    out: *mut *mut FastsvtSparse,
) -> FastsvtStatus {
    guard(|| {
        let t = triplets(nnz, row_idx, col_idx, values)?;
        let (m, _) = SparseMatrix::from_triplets(rows, cols, &t)?;
        put(out, FastsvtSparse(m))
    })
}

/// Reads a MatrixMarket coordinate file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_sparse_read_mtx(path: *const c_char, out: *mut *mut FastsvtSparse) -> FastsvtStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Failure(FastsvtStatus::Data, format!("path is not UTF-8: {e}")))?;
        let (m, _) = read_matrix_market(p)?;
        put(out, FastsvtSparse(m))
    })
}

/// # Safety
/// `a` must be a live handle; each non-NULL output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_sparse_shape(
    a: *const FastsvtSparse,
    rows: *mut usize,
    cols: *mut usize,
    nnz: *mut usize,
) -> FastsvtStatus {
    guard(|| {
        let a = &handle(a, "matrix")?.0;
        if !rows.is_null() {
            *rows = a.rows();
        }
        if !cols.is_null() {
            *cols = a.cols();
        }
        if !nnz.is_null() {
            *nnz = a.nnz();
        }
        Ok(())
    })
}

/// # Safety
/// `a` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_sparse_free(a: *mut FastsvtSparse) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Rank-`k` randomized SVD with oversampling `s` and power `p`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_rsvd(
    a: *const FastsvtSparse,
    algo: FastsvtRsvdAlgo,
    k: usize,
    p: usize,
    s: usize,
    seed: u64,
    out: *mut *mut FastsvtSvd,
) -> FastsvtStatus {
    guard(|| {
        let a = &handle(a, "matrix")?.0;
        let params = RsvdParams::new(k, p, seed).with_oversampling(s);
        let (res, _) = match algo {
            FastsvtRsvdAlgo::Basic => rsvd_basic(a, &params)?,
            FastsvtRsvdAlgo::PowerIteration => rsvd_pi(a, &params)?,
            FastsvtRsvdAlgo::BlockKrylov => rsvd_bki(a, &params)?,
        };
        put(out, FastsvtSvd(res))
    })
}

/// Top-`k` triplets of the exact SVD of the densified matrix; fails when
/// `min(rows, cols)` exceeds `cap`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_oracle_svd(
    a: *const FastsvtSparse,
    k: usize,
    cap: usize,
    out: *mut *mut FastsvtSvd,
) -> FastsvtStatus {
    guard(|| {
        let a = &handle(a, "matrix")?.0;
        let (m, n) = a.shape();
        if m.min(n) > cap {
            return Err(Error::SizeCap { dim: m.min(n), cap }.into());
        }
        let res = oracle_svd_capped(&a.to_dense(), cap)?.truncated(k);
        put(out, FastsvtSvd(res))
    })
}

/// # Safety
/// `svd` must be a live handle; each non-NULL output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svd_shape(
    svd: *const FastsvtSvd,
    rows: *mut usize,
    cols: *mut usize,
    rank: *mut usize,
) -> FastsvtStatus {
    guard(|| {
        let r = &handle(svd, "svd")?.0;
        if !rows.is_null() {
            *rows = r.rows();
        }
        if !cols.is_null() {
            *cols = r.cols();
        }
        if !rank.is_null() {
            *rank = r.rank();
        }
        Ok(())
    })
}

/// Copies the `rank` singular values, descending.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svd_singular_values(svd: *const FastsvtSvd, out: *mut f64, len: usize) -> FastsvtStatus {
    guard(|| {
        let r = &handle(svd, "svd")?.0;
        out_slice(out, len, r.rank(), "singular values")?.copy_from_slice(&r.s);
        Ok(())
    })
}

/// Copies `U` (rows x rank, row-major).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svd_left(svd: *const FastsvtSvd, out: *mut f64, len: usize) -> FastsvtStatus {
    guard(|| {
        let r = &handle(svd, "svd")?.0;
        copy_row_major(&r.u, out_slice(out, len, r.rows() * r.rank(), "U")?);
        Ok(())
    })
}

/// Copies `V` (cols x rank, row-major).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svd_right(svd: *const FastsvtSvd, out: *mut f64, len: usize) -> FastsvtStatus {
    guard(|| {
        let r = &handle(svd, "svd")?.0;
        copy_row_major(&r.v, out_slice(out, len, r.cols() * r.rank(), "V")?);
        Ok(())
    })
}

/// `||A - U S V^T||_F / ||A||_F` without forming the residual.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_qb_error(a: *const FastsvtSparse, svd: *const FastsvtSvd, out: *mut f64) -> FastsvtStatus {
    guard(|| {
        let a = &handle(a, "matrix")?.0;
        let r = &handle(svd, "svd")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = qb_error(a, r)?;
        Ok(())
    })
}

/// # Safety
/// `svd` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svd_free(svd: *mut FastsvtSvd) {
    if !svd.is_null() {
        drop(Box::from_raw(svd));
    }
}

/// Fills `out` with the defaults of a workload.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_svt_params_default(workload: FastsvtWorkload, out: *mut FastsvtSvtParams) -> FastsvtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = match workload {
            FastsvtWorkload::Image => Workload::Image,
            FastsvtWorkload::Ratings => Workload::Ratings,
            FastsvtWorkload::Generic => Workload::Generic,
        };
        *out = to_c_params(&SvtParams::for_workload(w));
        Ok(())
    })
}

fn to_c_params(p: &SvtParams) -> FastsvtSvtParams {
    FastsvtSvtParams {
        tau: p.tau.unwrap_or(0.0),
        delta: p.delta.unwrap_or(0.0),
        delta_decay: p.delta_decay.unwrap_or(0.0),
        l: p.l,
        epsilon: p.epsilon,
        i_max: p.i_max,
        i_reuse: p.i_reuse,
        q_reuse: p.q_reuse,
        strategy: match p.strategy {
            Strategy::None => FastsvtStrategy::None,
            Strategy::ReuseQ => FastsvtStrategy::ReuseQ,
            Strategy::ReuseU => FastsvtStrategy::ReuseU,
        },
        p0: p.p0,
        p_min: p.p_min,
        adaptive_power: p.adaptive_power,
        s: p.s,
        seed: p.seed,
        oracle_cap: p.oracle_cap,
    }
}

fn from_c_params(c: &FastsvtSvtParams) -> SvtParams {
    let opt = |x: f64| (x > 0.0).then_some(x);
    SvtParams {
        tau: opt(c.tau),
        delta: opt(c.delta),
        delta_decay: opt(c.delta_decay),
        l: c.l,
        epsilon: c.epsilon,
        i_max: c.i_max,
        i_reuse: c.i_reuse,
        q_reuse: c.q_reuse,
        strategy: match c.strategy {
            FastsvtStrategy::None => Strategy::None,
            FastsvtStrategy::ReuseQ => Strategy::ReuseQ,
            FastsvtStrategy::ReuseU => Strategy::ReuseU,
        },
        p0: c.p0,
        p_min: c.p_min,
        adaptive_power: c.adaptive_power,
        s: c.s,
        seed: c.seed,
        oracle_cap: c.oracle_cap,
    }
}

/// Completes a `rows x cols` matrix from `nnz` observed zero-based triplets.
/// `params` may be NULL for the generic defaults.
///
/// # Safety
/// The index and value arrays must hold `nnz` elements; `params` must be NULL
/// or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_complete(
    rows: usize,
    cols: usize,
    nnz: usize,
    row_idx: *const usize,
    col_idx: *const usize,
    values: *const f64,
    params: *const FastsvtSvtParams,
    solver: FastsvtSolver,
    out: *mut *mut FastsvtCompletion,
) -> FastsvtStatus {
    guard(|| {
        let t = triplets(nnz, row_idx, col_idx, values)?;
        let (obs, _) = ObservationSet::from_triplets_last_wins(rows, cols, &t)?;
        let p = params
            .as_ref()
            .map_or_else(|| SvtParams::for_workload(Workload::Generic), from_c_params);
        let res = match solver {
            FastsvtSolver::ReferenceOracle => svt_reference(&obs, &p, Backend::Oracle)?,
            FastsvtSolver::ReferenceBki => svt_reference(&obs, &p, Backend::RsvdBki)?,
            FastsvtSolver::Fast => svt_fast(&obs, &p)?,
        };
        put(out, FastsvtCompletion(res))
    })
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_completion_info(c: *const FastsvtCompletion, out: *mut FastsvtCompletionInfo) -> FastsvtStatus {
    guard(|| {
        let r = &handle(c, "completion")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = FastsvtCompletionInfo {
            rows: r.rows(),
            cols: r.cols(),
            rank: r.rank,
            iterations: r.iterations,
            converged: r.converged,
            residual: r.residual,
            tau: r.tau,
            delta: r.delta,
        };
        Ok(())
    })
}

/// Predicted entry `(i, j)` of the completed matrix.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_completion_predict(
    c: *const FastsvtCompletion,
    i: usize,
    j: usize,
    out: *mut f64,
) -> FastsvtStatus {
    guard(|| {
        let r = &handle(c, "completion")?.0;
        if i >= r.rows() || j >= r.cols() {
            return Err(Error::IndexOutOfRange {
                row: i,
                col: j,
                rows: r.rows(),
                cols: r.cols(),
            }
            .into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.predict(i, j);
        Ok(())
    })
}

/// Copies the completed matrix (rows x cols, row-major).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_completion_dense(c: *const FastsvtCompletion, out: *mut f64, len: usize) -> FastsvtStatus {
    guard(|| {
        let r = &handle(c, "completion")?.0;
        let dst = out_slice(out, len, r.rows() * r.cols(), "completed matrix")?;
        copy_row_major(&r.to_dense(), dst);
        Ok(())
    })
}

/// # Safety
/// `c` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastsvt_completion_free(c: *mut FastsvtCompletion) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}
