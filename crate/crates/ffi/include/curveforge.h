#ifndef CURVEFORGE_H
#define CURVEFORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Model selector.
typedef enum CfModelKind {
  CF_MODEL_KIND_VASICEK = 0,
  CF_MODEL_KIND_G2PP = 1,
  CF_MODEL_KIND_HO_LEE = 2,
  CF_MODEL_KIND_HULL_WHITE = 3,
} CfModelKind;

// Status code of every call.
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_DOMAIN = 3,
  CF_STATUS_ORDERING = 4,
  CF_STATUS_EXTRAPOLATION = 5,
  CF_STATUS_NO_SOLUTION = 6,
  CF_STATUS_CONDITIONING = 7,
  CF_STATUS_BOUNDARY = 8,
  CF_STATUS_OPTIMIZATION_FAILED = 9,
  CF_STATUS_IO = 10,
  CF_STATUS_PANIC = 11,
} CfStatus;

// Initial discount curve.
typedef struct CfCurve CfCurve;

// Model with its parameters.
typedef struct CfModel CfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length plus one.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t cf_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *cf_version(void);

// Builds a curve from `n` pillars `(times[i], dfs[i])`.
//
// # Safety
// `times` and `dfs` must be valid for `n` reads; `out` must be writable.
enum CfStatus cf_curve_new(const double *times,
                           const double *dfs,
                           size_t n,
                           bool flat_extrapolation,
                           struct CfCurve **out_curve);

// Releases a curve. Null is ignored.
//
// # Safety
// `curve` must come from [`cf_curve_new`] and not be used afterwards.
void cf_curve_free(struct CfCurve *curve);

// `P^M(0,t)`.
//
// # Safety
// `curve` must be a live handle; `out_value` must be writable.
enum CfStatus cf_curve_discount(const struct CfCurve *curve, double t, double *out_value);

// Instantaneous forward `f^M(0,t)`.
//
// # Safety
// `curve` must be a live handle; `out_value` must be writable.
enum CfStatus cf_curve_forward(const struct CfCurve *curve, double t, double *out_value);

// Creates a model from its parameters in canonical order:
// Vasicek (a, b, sigma); G2++ (a, b, sigma, eta, rho); Ho-Lee (sigma);
// Hull-White (a, sigma).
//
// # Safety
// `params` must be valid for `n` reads; `out_model` must be writable.
enum CfStatus cf_model_new(enum CfModelKind kind,
                           const double *params,
                           size_t n,
                           struct CfModel **out_model);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from [`cf_model_new`] and not be used afterwards.
void cf_model_free(struct CfModel *model);

// Closed-form zero-coupon price `P(t, maturity)` at `state` (`[r]` or
// `[x, y]`). `curve` may be null for Vasicek.
//
// # Safety
// Handles must be live or null; `state` valid for `n_state` reads.
enum CfStatus cf_model_price(const struct CfModel *model,
                             const struct CfCurve *curve,
                             double t,
                             const double *state,
                             size_t n_state,
                             double maturity,
                             double *out_price);

// Maturity derivative `∂P(t,T)/∂T` of a G2++ model.
//
// # Safety
// Handles must be live; `out_value` writable.
enum CfStatus cf_g2pp_dpdt(const struct CfModel *model,
                           const struct CfCurve *curve,
                           double t,
                           double x,
                           double y,
                           double maturity,
                           double *out_value);

// Monte-Carlo estimate of the zero-coupon price with its standard error.
//
// # Safety
// As for [`cf_model_price`]; both out pointers writable.
enum CfStatus cf_mc_zero_price(const struct CfModel *model,
                               const struct CfCurve *curve,
                               double t,
                               const double *state,
                               size_t n_state,
                               double maturity,
                               size_t n_paths,
                               double step,
                               uint64_t seed,
                               double *out_value,
                               double *out_stderr);

// Least-squares calibration of Ho-Lee (`out_params[0] = sigma`) or
// Hull-White (`out_params = [a, sigma]`) to `n` quotes `(taus[i],
// prices[i])` observed `days_after_curve` days after the curve date.
//
// # Safety
// Arrays valid for `n` reads; `out_params` valid for 2 writes.
enum CfStatus cf_calibrate(enum CfModelKind kind,
                           const struct CfCurve *curve,
                           int64_t days_after_curve,
                           double short_rate,
                           const double *taus,
                           const double *prices,
                           size_t n,
                           double *out_params,
                           double *out_objective,
                           bool *out_converged);

// Maximum-likelihood fit of Vasicek (`n_instruments = 1`) or G2++ (`2`).
//
// `times` holds `n_obs` observation times in years from the curve date,
// `prices` is row-major `n_obs × n_instruments`, `maturities` has
// `n_instruments` entries: years from the curve date, or times to maturity
// when `constant_tenor` is set. `out_params` receives 3 or 5 values.
//
// # Safety
// Arrays valid for the stated lengths; `curve` live (G2++) or null.
enum CfStatus cf_fit_ml(enum CfModelKind kind,
                        const struct CfCurve *curve,
                        const double *times,
                        const double *prices,
                        size_t n_obs,
                        const double *maturities,
                        size_t n_instruments,
                        bool constant_tenor,
                        size_t restarts,
                        uint64_t seed,
                        double *out_params,
                        double *out_loglik,
                        bool *out_converged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVEFORGE_H */
