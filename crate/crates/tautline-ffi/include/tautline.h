#ifndef TAUTLINE_H
#define TAUTLINE_H

/* Generated by cbindgen from tautline-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every C entry point.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_INVALID_DATA = 3,
  TL_STATUS_COERCIVITY_ERROR = 4,
  TL_STATUS_NON_COERCIVE_DATA = 5,
  TL_STATUS_UNSUPPORTED = 6,
  TL_STATUS_NO_CONVERGENCE = 7,
  TL_STATUS_SIZE_LIMIT = 8,
} TlStatus;

/**
 * Fitting methods of the adaptive entry point.
 */
typedef enum TlMethod {
  TL_METHOD_MEAN = 0,
  TL_METHOD_QUANTILE = 1,
  TL_METHOD_POISSON = 2,
  TL_METHOD_BINARY = 3,
} TlMethod;

/**
 * Benchmark signals.
 */
typedef enum TlSignal {
  TL_SIGNAL_BLOCKS = 0,
  TL_SIGNAL_BUMPS = 1,
  TL_SIGNAL_HEAVISINE = 2,
  TL_SIGNAL_DOPPLER = 3,
} TlSignal;

/**
 * An owned fit: values plus diagnostics. Opaque to C.
 */
typedef struct TlFit TlFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. Valid until the next
 * failing call; never null.
 */
const char *tl_last_error_message(void);

/**
 * Least-squares fit at a constant penalty.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be a valid slot.
 */
enum TlStatus tl_fit_mean(const double *y, uintptr_t n, double lambda, struct TlFit **out);

/**
 * Smoothed absolute-value fit at scale `delta` and a constant penalty.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be a valid slot.
 */
enum TlStatus tl_fit_huber(const double *y,
                           uintptr_t n,
                           double delta,
                           double lambda,
                           struct TlFit **out);

/**
 * Exact quantile fit at level `beta` and a constant penalty.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be a valid slot.
 */
enum TlStatus tl_fit_quantile(const double *y,
                              uintptr_t n,
                              double beta,
                              double lambda,
                              struct TlFit **out);

/**
 * Penalized maximum likelihood for counts (`poisson` nonzero) or binary
 * labels, on the natural-parameter scale.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be a valid slot.
 */
enum TlStatus tl_fit_likelihood(const double *y,
                                uintptr_t n,
                                int32_t poisson,
                                double lambda,
                                struct TlFit **out);

/**
 * Adaptive fit by multiscale local squeezing with dyadic intervals.
 * `beta` is only read for the quantile method; `gamma` is the squeeze
 * factor (pass 0 for the default 0.9).
 *
 * # Safety
 * `y` must point to `n` doubles and `out` must be a valid slot.
 */
enum TlStatus tl_fit_adaptive(const double *y,
                              uintptr_t n,
                              enum TlMethod method,
                              double beta,
                              double gamma,
                              struct TlFit **out);

/**
 * Number of observations in a fit.
 *
 * # Safety
 * `fit` must be a live handle from a fitting call.
 */
uintptr_t tl_fit_len(const struct TlFit *fit);

/**
 * Copies the fitted values into a caller buffer of length `tl_fit_len`.
 *
 * # Safety
 * `fit` must be live; `out` must hold `tl_fit_len(fit)` doubles.
 */
enum TlStatus tl_fit_values(const struct TlFit *fit, double *out);

/**
 * Copies the per-gap penalties into a caller buffer of length
 * `tl_fit_len - 1`.
 *
 * # Safety
 * `fit` must be live; `out` must hold `tl_fit_len(fit) - 1` doubles.
 */
enum TlStatus tl_fit_lambda(const struct TlFit *fit, double *out);

/**
 * Penalized objective value of the fit.
 *
 * # Safety
 * `fit` must be a live handle.
 */
double tl_fit_objective(const struct TlFit *fit);

/**
 * Number of maximal constant segments.
 *
 * # Safety
 * `fit` must be a live handle.
 */
uintptr_t tl_fit_segment_count(const struct TlFit *fit);

/**
 * Number of local extreme segments; pass a nonzero `interior_only` to
 * exclude segments touching the boundary.
 *
 * # Safety
 * `fit` must be a live handle.
 */
uintptr_t tl_fit_extrema(const struct TlFit *fit, int32_t interior_only);

/**
 * Worst violation of the exact optimality conditions; effectively zero
 * for a correct fit.
 *
 * # Safety
 * `fit` must be a live handle.
 */
double tl_fit_certificate_violation(const struct TlFit *fit);

/**
 * Squeeze iterations (1 for fixed-penalty fits).
 *
 * # Safety
 * `fit` must be a live handle.
 */
uintptr_t tl_fit_iterations(const struct TlFit *fit);

/**
 * Releases a fit handle.
 *
 * # Safety
 * `fit` must come from a fitting call and must not be used afterwards.
 */
void tl_fit_free(struct TlFit *fit);

/**
 * Samples a benchmark signal into a caller buffer of length `n`.
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum TlStatus tl_signal(enum TlSignal kind, uintptr_t n, double *out);

/**
 * Library version as a static C string.
 */
const char *tl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAUTLINE_H */
