/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef FASTSVT_H
#define FASTSVT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FastsvtStatus {
  FASTSVT_STATUS_OK = 0,
  FASTSVT_STATUS_NULL_POINTER = 1,
  /**
   * Invalid parameter or size cap.
   */
  FASTSVT_STATUS_CONFIG = 2,
  /**
   * Malformed input: dimensions, indices, parse or I/O errors.
   */
  FASTSVT_STATUS_DATA = 3,
  /**
   * Rank deficiency, non-finite values or a solver that did not converge.
   */
  FASTSVT_STATUS_NUMERICAL = 4,
  /**
   * Output buffer shorter than required; the message names the length.
   */
  FASTSVT_STATUS_BUFFER_TOO_SMALL = 5,
  FASTSVT_STATUS_PANIC = 6,
} FastsvtStatus;

typedef enum FastsvtRsvdAlgo {
  FASTSVT_RSVD_ALGO_BASIC = 0,
  FASTSVT_RSVD_ALGO_POWER_ITERATION = 1,
  FASTSVT_RSVD_ALGO_BLOCK_KRYLOV = 2,
} FastsvtRsvdAlgo;

typedef enum FastsvtWorkload {
  FASTSVT_WORKLOAD_IMAGE = 0,
  FASTSVT_WORKLOAD_RATINGS = 1,
  FASTSVT_WORKLOAD_GENERIC = 2,
} FastsvtWorkload;

typedef enum FastsvtStrategy {
  FASTSVT_STRATEGY_NONE = 0,
  FASTSVT_STRATEGY_REUSE_Q = 1,
  FASTSVT_STRATEGY_REUSE_U = 2,
} FastsvtStrategy;

typedef enum FastsvtSolver {
  /**
   * Reference SVT with the dense oracle SVD.
   */
  FASTSVT_SOLVER_REFERENCE_ORACLE = 0,
  /**
   * Reference SVT with rSVD-BKI and no recycling.
   */
  FASTSVT_SOLVER_REFERENCE_BKI = 1,
  /**
   * Fast SVT with the configured recycling strategy.
   */
  FASTSVT_SOLVER_FAST = 2,
} FastsvtSolver;

typedef struct FastsvtCompletion FastsvtCompletion;

typedef struct FastsvtSparse FastsvtSparse;

typedef struct FastsvtSvd FastsvtSvd;

/**
 * SVT parameters. `tau`, `delta` and `delta_decay` use their defaults when
 * zero, negative or NaN.
 */
typedef struct FastsvtSvtParams {
  double tau;
  double delta;
  double delta_decay;
  size_t l;
  double epsilon;
  size_t i_max;
  size_t i_reuse;
  size_t q_reuse;
  enum FastsvtStrategy strategy;
  size_t p0;
  size_t p_min;
  bool adaptive_power;
  size_t s;
  uint64_t seed;
  size_t oracle_cap;
} FastsvtSvtParams;

typedef struct FastsvtCompletionInfo {
  size_t rows;
  size_t cols;
  size_t rank;
  size_t iterations;
  bool converged;
  double residual;
  double tau;
  double delta;
} FastsvtCompletionInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fastsvt_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next fastsvt call on this thread.
 */
const char *fastsvt_last_error_message(void);

/**
 * Builds a CSR matrix from `nnz` zero-based triplets; repeated positions keep the last value.
 *
 * # Safety
 * The index and value arrays must hold `nnz` elements; `out` must be writable.
 */
enum FastsvtStatus fastsvt_sparse_from_triplets(size_t rows,
                                                size_t cols,
                                                size_t nnz,
                                                const size_t *row_idx,
                                                const size_t *col_idx,
                                                const double *values,
                                                struct FastsvtSparse **out);

/**
 * Reads a MatrixMarket coordinate file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FastsvtStatus fastsvt_sparse_read_mtx(const char *path, struct FastsvtSparse **out);

/**
 * # Safety
 * `a` must be a live handle; each non-NULL output pointer must be writable.
 */
enum FastsvtStatus fastsvt_sparse_shape(const struct FastsvtSparse *a,
                                        size_t *rows,
                                        size_t *cols,
                                        size_t *nnz);

/**
 * # Safety
 * `a` must be NULL or a handle not yet freed.
 */
void fastsvt_sparse_free(struct FastsvtSparse *a);

/**
 * Rank-`k` randomized SVD with oversampling `s` and power `p`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum FastsvtStatus fastsvt_rsvd(const struct FastsvtSparse *a,
                                enum FastsvtRsvdAlgo algo,
                                size_t k,
                                size_t p,
                                size_t s,
                                uint64_t seed,
                                struct FastsvtSvd **out);

/**
 * Top-`k` triplets of the exact SVD of the densified matrix; fails when
 * `min(rows, cols)` exceeds `cap`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum FastsvtStatus fastsvt_oracle_svd(const struct FastsvtSparse *a,
                                      size_t k,
                                      size_t cap,
                                      struct FastsvtSvd **out);

/**
 * # Safety
 * `svd` must be a live handle; each non-NULL output pointer must be writable.
 */
enum FastsvtStatus fastsvt_svd_shape(const struct FastsvtSvd *svd,
                                     size_t *rows,
                                     size_t *cols,
                                     size_t *rank);

/**
 * Copies the `rank` singular values, descending.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FastsvtStatus fastsvt_svd_singular_values(const struct FastsvtSvd *svd,
                                               double *out,
                                               size_t len);

/**
 * Copies `U` (rows x rank, row-major).
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FastsvtStatus fastsvt_svd_left(const struct FastsvtSvd *svd, double *out, size_t len);

/**
 * Copies `V` (cols x rank, row-major).
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FastsvtStatus fastsvt_svd_right(const struct FastsvtSvd *svd, double *out, size_t len);

/**
 * `||A - U S V^T||_F / ||A||_F` without forming the residual.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum FastsvtStatus fastsvt_qb_error(const struct FastsvtSparse *a,
                                    const struct FastsvtSvd *svd,
                                    double *out);

/**
 * # Safety
 * `svd` must be NULL or a handle not yet freed.
 */
void fastsvt_svd_free(struct FastsvtSvd *svd);

/**
 * Fills `out` with the defaults of a workload.
 *
 * # Safety
 * `out` must be writable.
 */
enum FastsvtStatus fastsvt_svt_params_default(enum FastsvtWorkload workload,
                                              struct FastsvtSvtParams *out);

/**
 * Completes a `rows x cols` matrix from `nnz` observed zero-based triplets.
 * `params` may be NULL for the generic defaults.
 *
 * # Safety
 * The index and value arrays must hold `nnz` elements; `params` must be NULL
 * or valid; `out` must be writable.
 */
enum FastsvtStatus fastsvt_complete(size_t rows,
                                    size_t cols,
                                    size_t nnz,
                                    const size_t *row_idx,
                                    const size_t *col_idx,
                                    const double *values,
                                    const struct FastsvtSvtParams *params,
                                    enum FastsvtSolver solver,
                                    struct FastsvtCompletion **out);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum FastsvtStatus fastsvt_completion_info(const struct FastsvtCompletion *c,
                                           struct FastsvtCompletionInfo *out);

/**
 * Predicted entry `(i, j)` of the completed matrix.
 *
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum FastsvtStatus fastsvt_completion_predict(const struct FastsvtCompletion *c,
                                              size_t i,
                                              size_t j,
                                              double *out);

/**
 * Copies the completed matrix (rows x cols, row-major).
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum FastsvtStatus fastsvt_completion_dense(const struct FastsvtCompletion *c,
                                            double *out,
                                            size_t len);

/**
 * # Safety
 * `c` must be NULL or a handle not yet freed.
 */
void fastsvt_completion_free(struct FastsvtCompletion *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTSVT_H */
