#ifndef LRV_H
#define LRV_H

/* Generated by cbindgen from the lrv-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum LrvStatus {
  LrvStatus_Ok = 0,
  LrvStatus_NullPointer = 1,
  LrvStatus_InvalidConfig = 2,
  LrvStatus_NonFinite = 3,
  LrvStatus_DimensionMismatch = 4,
  LrvStatus_DegenerateScale = 5,
  LrvStatus_InsufficientData = 6,
  LrvStatus_InternalError = 7,
} LrvStatus;

/**
 * Opaque univariate estimator handle.
 */
typedef struct LrvEstimator LrvEstimator;

/**
 * Opaque long-run covariance matrix estimator handle.
 */
typedef struct LrvLrcm LrvLrcm;

/**
 * Estimator configuration (plain old data).
 *
 * With `auto_select != 0` the smoothing parameters are chosen online and
 * the coefficient/exponent fields are ignored.
 */
typedef struct LrvConfig {
  /**
   * Characteristic exponent of the taper (>= 1).
   */
  uint32_t q;
  /**
   * Memory parameter: 1.0, or >= 2.0 for constant-space updates.
   */
  double phi;
  /**
   * Nonzero to select smoothing parameters automatically.
   */
  int32_t auto_select;
  /**
   * Subsampling coefficient and exponent.
   */
  double psi_coeff;
  double psi_exp;
  /**
   * Tapering coefficient and exponent.
   */
  double theta_coeff;
  double theta_exp;
  /**
   * Finite-sample schedule floors.
   */
  uint64_t s_floor;
  uint64_t t_floor;
  /**
   * Nonzero when the process mean is known to be zero.
   */
  int32_t zero_mean;
  /**
   * Taper order of the nuisance stream in automatic mode.
   */
  uint32_t nuisance_order;
} LrvConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default configuration: automatic selection with the rate-optimal
 * exponents for the given `q` and `phi`, floors of 5, unknown mean.
 */
struct LrvConfig lrv_config_default(uint32_t q, double phi);

/**
 * Create an estimator from the first observation. On success writes the
 * handle to `out`; the handle must be released with
 * [`lrv_estimator_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable handle storage.
 */
enum LrvStatus lrv_estimator_new(struct LrvConfig config, double x1, struct LrvEstimator **out);

/**
 * Ingest one observation.
 *
 * # Safety
 * `handle` must be a live pointer from [`lrv_estimator_new`].
 */
enum LrvStatus lrv_estimator_update(struct LrvEstimator *handle, double x);

/**
 * Ingest a contiguous block of observations.
 *
 * # Safety
 * `handle` as above; `xs` must point to `len` readable doubles.
 */
enum LrvStatus lrv_estimator_update_block(struct LrvEstimator *handle,
                                          const double *xs,
                                          size_t len);

/**
 * Read the current LRV estimate.
 *
 * # Safety
 * `handle` as above; `out` must be writable.
 */
enum LrvStatus lrv_estimator_estimate(const struct LrvEstimator *handle, double *out);

/**
 * Read the sample size and current smoothing parameters. Null outputs are
 * skipped.
 *
 * # Safety
 * `handle` as above; non-null outputs must be writable.
 */
enum LrvStatus lrv_estimator_shape(const struct LrvEstimator *handle,
                                   uint64_t *n,
                                   uint64_t *s,
                                   uint64_t *t);

/**
 * Release an estimator handle. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer from [`lrv_estimator_new`] that has
 * not been freed.
 */
void lrv_estimator_free(struct LrvEstimator *handle);

/**
 * Create a `dim`-dimensional matrix estimator from the first observation
 * vector. Requires `phi = 1`.
 *
 * # Safety
 * `x1` must point to `dim` readable doubles; `out` must be writable.
 */
enum LrvStatus lrv_lrcm_new(struct LrvConfig config,
                            const double *x1,
                            size_t dim,
                            struct LrvLrcm **out);

/**
 * Ingest one observation vector of length `dim`.
 *
 * # Safety
 * `handle` must be live; `x` must point to `dim` readable doubles.
 */
enum LrvStatus lrv_lrcm_update(struct LrvLrcm *handle, const double *x, size_t dim);

/**
 * Write the current matrix estimate in row-major order into `out`
 * (`dim * dim` doubles). With `apply_pd_adjust != 0` the
 * positive-definiteness adjustment with default parameters is applied
 * first; this requires strictly positive diagonal estimates.
 *
 * # Safety
 * `handle` must be live; `out` must point to `len` writable doubles.
 */
enum LrvStatus lrv_lrcm_estimate(const struct LrvLrcm *handle,
                                 double *out,
                                 size_t len,
                                 int32_t apply_pd_adjust);

/**
 * Release a matrix estimator handle. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer from [`lrv_lrcm_new`] that has not
 * been freed.
 */
void lrv_lrcm_free(struct LrvLrcm *handle);

/**
 * Half-width stopping rule with the step-penalty
 * `p(n) = eps * 1{n <= pen_horizon}`. Returns 1 to stop, 0 to continue.
 */
int32_t lrv_halfwidth_stop(uint64_t n,
                           double sigma_hat,
                           double eps,
                           double alpha,
                           uint64_t pen_horizon);

/**
 * Standard normal quantile.
 */
double lrv_normal_quantile(double p);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrv_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRV_H */
