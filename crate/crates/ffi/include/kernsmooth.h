#ifndef KERNSMOOTH_H
#define KERNSMOOTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  /**
   * Bad configuration value (halfwidth, sigma, k2, enum value, ...).
   */
  KS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Invalid series: too short, unsorted, duplicate or non-finite values.
   */
  KS_STATUS_INVALID_INPUT = 3,
  /**
   * A kernel window or fit could not be formed.
   */
  KS_STATUS_ESTIMATION = 4,
  /**
   * Halfwidth selection failed.
   */
  KS_STATUS_SELECTION = 5,
  /**
   * The requested quantity was not computed (e.g. error bars).
   */
  KS_STATUS_UNAVAILABLE = 6,
  /**
   * Caller buffer is shorter than the data.
   */
  KS_STATUS_BUFFER_TOO_SMALL = 7,
  KS_STATUS_PANIC = 8,
} KsStatus;

typedef enum KsKernel {
  KS_KERNEL_PARABOLIC = 0,
  KS_KERNEL_RECTANGULAR = 1,
} KsKernel;

typedef enum KsSelector {
  KS_SELECTOR_RICE = 0,
  KS_SELECTOR_FITTED = 1,
} KsSelector;

/**
 * Opaque smoothing result.
 */
typedef struct KsEstimate KsEstimate;

/**
 * Opaque time series.
 */
typedef struct KsSeries KsSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `ks_*` call on the same thread.
 */
const char *ks_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ks_version(void);

/**
 * Copies `len` samples into a new series handle.
 *
 * # Safety
 * `times` and `values` must point to `len` readable doubles; `out` must be
 * writable.
 */
enum KsStatus ks_series_new(const double *times,
                            const double *values,
                            uintptr_t len,
                            struct KsSeries **out);

/**
 * Attaches a known noise standard deviation (enables error bars for fixed
 * smoothing and skips noise estimation in the pipeline).
 *
 * # Safety
 * `series` must be a live handle from [`ks_series_new`].
 */
enum KsStatus ks_series_set_sigma(struct KsSeries *series, double sigma);

/**
 * # Safety
 * `series` must be NULL or a live handle; it is invalid afterwards.
 */
void ks_series_free(struct KsSeries *series);

/**
 * Number of samples, or 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
uintptr_t ks_series_len(const struct KsSeries *series);

/**
 * Three-point estimate of the noise variance.
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_noise_variance(const struct KsSeries *series, double *out);

/**
 * Chooses a constant halfwidth on the default 40-point grid. `sigma2 <= 0`
 * means "use the series' sigma or estimate it" (fitted selector only).
 *
 * # Safety
 * `series` must be a live handle; `out_h` must be writable.
 */
enum KsStatus ks_select(const struct KsSeries *series,
                        enum KsKernel kern,
                        enum KsSelector selector,
                        double sigma2,
                        double *out_h);

/**
 * Smooths with constant halfwidth `h` (time units).
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_smooth_fixed(const struct KsSeries *series,
                              enum KsKernel kern,
                              double h,
                              struct KsEstimate **out);

/**
 * Runs the three-stage adaptive estimator with regularization constant
 * `k2` (1.0 is the default).
 *
 * # Safety
 * `series` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_run_pipeline(const struct KsSeries *series, double k2, struct KsEstimate **out);

/**
 * # Safety
 * `estimate` must be NULL or a live handle; it is invalid afterwards.
 */
void ks_estimate_free(struct KsEstimate *estimate);

/**
 * Number of estimation points, or 0 for NULL.
 *
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
uintptr_t ks_estimate_len(const struct KsEstimate *estimate);

/**
 * Second-derivative halfwidth used by the pipeline (NaN for fixed smoothing).
 *
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
double ks_estimate_h2(const struct KsEstimate *estimate);

/**
 * Noise variance used for the error bars (NaN when unknown).
 *
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
double ks_estimate_sigma2(const struct KsEstimate *estimate);

/**
 * Copies the estimate `ĝ(t_i)` into `buf` (capacity `len`).
 *
 * # Safety
 * `estimate` must be a live handle; `buf` must hold `len` writable doubles.
 */
enum KsStatus ks_estimate_copy_values(const struct KsEstimate *estimate,
                                      double *buf,
                                      uintptr_t len);

/**
 * Copies the standard-error bars; `KS_STATUS_UNAVAILABLE` when none were
 * computed.
 *
 * # Safety
 * `estimate` must be a live handle; `buf` must hold `len` writable doubles.
 */
enum KsStatus ks_estimate_copy_stderr(const struct KsEstimate *estimate,
                                      double *buf,
                                      uintptr_t len);

/**
 * Copies the halfwidth used at each point.
 *
 * # Safety
 * `estimate` must be a live handle; `buf` must hold `len` writable doubles.
 */
enum KsStatus ks_estimate_copy_halfwidths(const struct KsEstimate *estimate,
                                          double *buf,
                                          uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KERNSMOOTH_H */
