#ifndef MLRATE_H
#define MLRATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Curve variable: SNR `gamma`.
#define MLR_VARIABLE_SNR 0

// Curve variable: amplitude `sqrt(gamma)`.
#define MLR_VARIABLE_AMPLITUDE 1

// Curve variable: noise power `1/gamma`.
#define MLR_VARIABLE_NOISE_POWER 2

typedef enum MlrStatus {
  MLR_STATUS_OK = 0,
  MLR_STATUS_NULL_POINTER = 1,
  MLR_STATUS_INVALID_ARGUMENT = 2,
  // Malformed constellation document or constellation.
  MLR_STATUS_DOCUMENT = 3,
  // Non-convergence or insufficient Monte Carlo precision.
  MLR_STATUS_NUMERICAL = 4,
  MLR_STATUS_UNSUPPORTED = 5,
  MLR_STATUS_PANIC = 6,
} MlrStatus;

// Opaque constellation handle.
typedef struct MlrConstellation MlrConstellation;

// Opaque error-curve handle.
typedef struct MlrCurve MlrCurve;

// A point estimate; `samples` is zero for exact values.
typedef struct MlrEstimate {
  double value;
  double std_error;
  uint64_t samples;
} MlrEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mlr_version(void);

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *mlr_last_error(void);

// Built-in constellation (`pam`, `psk`, `qam`, `orthogonal`,
// `biorthogonal`, `sphere_test`) at unit mean energy.
//
// # Safety
// `family` must be a NUL-terminated string and `out` a valid pointer.
enum MlrStatus mlr_constellation_builtin(const char *family,
                                         size_t order,
                                         struct MlrConstellation **out);

// Constellation from a JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum MlrStatus mlr_constellation_from_json(const char *json, struct MlrConstellation **out);

// Constellation of `count` points given row-major in `coords`
// (`count * dimension` values), uniform priors. With `renormalize`
// non-zero the points are scaled to unit mean energy.
//
// # Safety
// `coords` must point to `count * dimension` doubles.
enum MlrStatus mlr_constellation_new(size_t dimension,
                                     size_t count,
                                     const double *coords,
                                     int32_t renormalize,
                                     struct MlrConstellation **out);

// Releases a constellation; null is ignored.
//
// # Safety
// `c` must come from a constructor above and not be used afterwards.
void mlr_constellation_free(struct MlrConstellation *c);

// # Safety
// `c` must be a live handle and the outputs valid pointers.
enum MlrStatus mlr_constellation_shape(const struct MlrConstellation *c,
                                       size_t *dimension,
                                       size_t *count);

// Distances from point `index` to the nearest and farthest points of its
// decision region. `d_max` is infinity for unbounded regions and NaN when
// the region is bounded but too large to enumerate.
//
// # Safety
// `c` must be a live handle and the outputs valid pointers.
enum MlrStatus mlr_constellation_distances(const struct MlrConstellation *c,
                                           size_t index,
                                           double *d_min,
                                           double *d_max);

// A convexity threshold of the symbol error rate by name, e.g.
// `snr_convex_from` or `noise_convex_to`.
//
// # Safety
// `c` must be a live handle, `name` NUL-terminated, `out` valid.
enum MlrStatus mlr_classify_threshold(const struct MlrConstellation *c,
                                      uint32_t variable_code,
                                      const char *name,
                                      double *out);

// Monte Carlo symbol-error-rate curve of a constellation.
//
// # Safety
// `c` must be a live handle and `out` valid.
enum MlrStatus mlr_curve_monte_carlo(const struct MlrConstellation *c,
                                     uint32_t variable_code,
                                     uint64_t samples,
                                     uint64_t seed,
                                     struct MlrCurve **out);

// Closed-form symbol-error-rate curve: `bpsk`, `qpsk`, `pam`, `qam` or
// `biorthogonal` (`order` points; ignored for bpsk and qpsk).
//
// # Safety
// `family` must be NUL-terminated and `out` valid.
enum MlrStatus mlr_curve_closed_form(const char *family,
                                     size_t order,
                                     uint32_t variable_code,
                                     struct MlrCurve **out);

// Releases a curve; null is ignored.
//
// # Safety
// `curve` must come from a constructor above and not be used afterwards.
void mlr_curve_free(struct MlrCurve *curve);

// Value and first two derivatives at `x`. Any output may be null.
//
// # Safety
// `curve` must be a live handle; non-null outputs must be valid.
enum MlrStatus mlr_curve_evaluate(const struct MlrCurve *curve,
                                  double x,
                                  struct MlrEstimate *value,
                                  struct MlrEstimate *first,
                                  struct MlrEstimate *second);

// Jammer analysis of a curve over noise power: the inflection point and
// the tangency threshold of the optimal on-off strategy, searched on
// `[lo, hi]`.
//
// # Safety
// `curve` must be a live handle and the outputs valid.
enum MlrStatus mlr_jammer_threshold(const struct MlrCurve *curve,
                                    double lo,
                                    double hi,
                                    double *inflection,
                                    double *threshold);

// Gaussian tail probability `Q(x)`.
double mlr_q(double x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLRATE_H */
