#ifndef RMTLAB_H
#define RMTLAB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RmtStatus {
  RMT_STATUS_OK = 0,
  RMT_STATUS_NULL_POINTER = 1,
  RMT_STATUS_INVALID_ARGUMENT = 2,
  RMT_STATUS_INVALID_DISTRIBUTION = 3,
  RMT_STATUS_UNKNOWN_ATOM = 4,
  RMT_STATUS_MATCH_INFEASIBLE = 5,
  RMT_STATUS_SOLVER = 6,
  RMT_STATUS_PRECONDITION = 7,
  RMT_STATUS_CONFIG = 8,
  RMT_STATUS_IO = 9,
  RMT_STATUS_BUFFER_TOO_SMALL = 10,
  RMT_STATUS_PANIC = 11,
  RMT_STATUS_OTHER = 12,
} RmtStatus;

/**
 * Which singular vector family [`rmt_svd_vector`] reads.
 */
typedef enum RmtVectorSide {
  /**
   * `u_i ∈ C^n`.
   */
  RMT_VECTOR_SIDE_RIGHT = 0,
  /**
   * `v_i ∈ C^p`.
   */
  RMT_VECTOR_SIDE_LEFT = 1,
} RmtVectorSide;

/**
 * An atom law.
 */
typedef struct RmtAtom RmtAtom;

/**
 * A `p × n` data matrix with `p ≤ n`.
 */
typedef struct RmtMatrix RmtMatrix;

/**
 * Singular value system of a data matrix.
 */
typedef struct RmtSvd RmtSvd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rmt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rmt_version(void);

/**
 * Resolves a catalog name such as `"rademacher"` or
 * `"gauss-divisible:t=0.5:base=rademacher"`.
 */
enum RmtStatus rmt_atom_from_name(const char *name, struct RmtAtom **atom_out);

/**
 * Releases an atom; null is ignored.
 */
void rmt_atom_free(struct RmtAtom *atom);

/**
 * Exact `E Re(ζ)^m Im(ζ)^l`.
 */
enum RmtStatus rmt_atom_mixed_moment(const struct RmtAtom *atom,
                                     size_t m,
                                     size_t l,
                                     double *value_out);

/**
 * Whether two atoms agree on every mixed moment of total order `<= k`.
 */
enum RmtStatus rmt_atom_match_order(const struct RmtAtom *a,
                                    const struct RmtAtom *b,
                                    size_t k,
                                    bool *matched_out);

/**
 * Draws a `p × n` matrix of iid entries; bit-reproducible for a given seed.
 * A tall request (`p > n`) is stored transposed.
 */
enum RmtStatus rmt_matrix_generate(size_t p,
                                   size_t n,
                                   const struct RmtAtom *atom,
                                   uint64_t seed,
                                   struct RmtMatrix **matrix_out);

/**
 * Builds a matrix from `rows × cols` row-major interleaved `(re, im)` pairs.
 */
enum RmtStatus rmt_matrix_from_values(size_t rows,
                                      size_t cols,
                                      const double *values,
                                      size_t len,
                                      struct RmtMatrix **matrix_out);

void rmt_matrix_free(struct RmtMatrix *matrix);

/**
 * Stored dimensions, `p ≤ n`.
 */
enum RmtStatus rmt_matrix_dims(const struct RmtMatrix *matrix, size_t *p_out, size_t *n_out);

/**
 * Ascending eigenvalues `λ_1 ≤ … ≤ λ_p` of `(1/n) M M*` into `values[0..p]`.
 */
enum RmtStatus rmt_matrix_spectrum(const struct RmtMatrix *matrix, double *values, size_t len);

/**
 * Full singular value system, checked against its residuals.
 */
enum RmtStatus rmt_svd_compute(const struct RmtMatrix *matrix, struct RmtSvd **svd_out);

void rmt_svd_free(struct RmtSvd *svd);

/**
 * Ascending singular values `σ_1 ≤ … ≤ σ_p` into `values[0..p]`.
 */
enum RmtStatus rmt_svd_sigma(const struct RmtSvd *svd, double *values, size_t len);

/**
 * Singular vector `index` (0-based, paired with `σ_{index+1}`) as interleaved
 * `(re, im)` pairs: `2n` numbers for the right side, `2p` for the left.
 */
enum RmtStatus rmt_svd_vector(const struct RmtSvd *svd,
                              enum RmtVectorSide side,
                              size_t index,
                              double *values,
                              size_t len);

/**
 * Spectral edges `((1-√y)², (1+√y)²)` for `0 < y ≤ 1`.
 */
enum RmtStatus rmt_mp_edges(double y, double *a_out, double *b_out);

enum RmtStatus rmt_mp_density(double x, double y, double *value_out);

enum RmtStatus rmt_mp_cdf(double x, double y, double *value_out);

enum RmtStatus rmt_mp_quantile(double q, double y, double *value_out);

/**
 * MP Stieltjes transform at `z = re + i·im`, `im > 0`.
 */
enum RmtStatus rmt_mp_stieltjes(double re, double im, double y, double *re_out, double *im_out);

/**
 * Dyson sine kernel `sin(π(x-y)) / (π(x-y))`, 1 on the diagonal.
 */
double rmt_sine_kernel(double x, double y);

/**
 * Parses config text, runs the experiment and returns the report as JSON.
 * `json_out` must be released with [`rmt_string_free`]. `passed_out` may be null.
 */
enum RmtStatus rmt_run_config(const char *config, char **json_out, bool *passed_out);

/**
 * Releases a string returned by this library; null is ignored.
 */
void rmt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMTLAB_H */
