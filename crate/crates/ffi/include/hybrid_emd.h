#ifndef HYBRID_EMD_H
#define HYBRID_EMD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which function of a decomposition component to copy out.
 */
typedef enum HemdPart {
  HEMD_PART_IMF = 0,
  HEMD_PART_AMPLITUDE = 1,
  HEMD_PART_FREQUENCY = 2,
} HemdPart;

typedef enum HemdStatus {
  HEMD_STATUS_OK = 0,
  HEMD_STATUS_NULL_POINTER = 1,
  HEMD_STATUS_INVALID_ARGUMENT = 2,
  HEMD_STATUS_OUT_OF_DOMAIN = 3,
  HEMD_STATUS_FIT_FAILED = 4,
  HEMD_STATUS_ENVELOPE_FAILED = 5,
  HEMD_STATUS_FREQUENCY_FAILED = 6,
  HEMD_STATUS_PANIC = 7,
} HemdStatus;

typedef struct HemdDecomposition HemdDecomposition;

/**
 * Basis environment: knots, order and the precomputed extgrid tables.
 */
typedef struct HemdEnv HemdEnv;

typedef struct HemdSpline HemdSpline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *hemd_last_error(void);

/**
 * Uniform knots on `[start, end]` sized so that the basis has `basis_size` functions.
 *
 * # Safety
 * `out` must be a valid pointer to writable handle storage.
 */
enum HemdStatus hemd_env_new_uniform(double start,
                                     double end,
                                     size_t order,
                                     size_t basis_size,
                                     size_t infill,
                                     struct HemdEnv **out);

/**
 * # Safety
 * `env` must be null or a handle from `hemd_env_new_uniform` not yet freed.
 */
void hemd_env_free(struct HemdEnv *env);

/**
 * Number of basis functions (spline coefficients).
 *
 * # Safety
 * `env` must be a live handle.
 */
size_t hemd_env_basis_count(const struct HemdEnv *env);

/**
 * Number of extgrid points.
 *
 * # Safety
 * `env` must be a live handle.
 */
size_t hemd_env_extgrid_len(const struct HemdEnv *env);

/**
 * Copies the extgrid into `out` (capacity `len`).
 *
 * # Safety
 * `env` must be a live handle and `out` valid for `len` writes.
 */
enum HemdStatus hemd_env_extgrid(const struct HemdEnv *env, double *out, size_t len);

/**
 * Least-squares fit of `len` samples whose first and last times are the domain ends.
 *
 * # Safety
 * `env` must be a live handle, `times`/`values` valid for `len` reads and
 * `out` valid handle storage.
 */
enum HemdStatus hemd_fit(const struct HemdEnv *env,
                         const double *times,
                         const double *values,
                         size_t len,
                         struct HemdSpline **out);

/**
 * Spline from `len` B-spline coefficients on `env`.
 *
 * # Safety
 * `env` must be a live handle, `coeffs` valid for `len` reads and `out`
 * valid handle storage.
 */
enum HemdStatus hemd_spline_from_coeffs(const struct HemdEnv *env,
                                        const double *coeffs,
                                        size_t len,
                                        struct HemdSpline **out);

/**
 * # Safety
 * `spline` must be null or a live spline handle.
 */
void hemd_spline_free(struct HemdSpline *spline);

/**
 * `deriv`-th derivative (0, 1 or 2) at `t`.
 *
 * # Safety
 * `spline` must be a live handle and `out` a valid pointer.
 */
enum HemdStatus hemd_spline_eval(const struct HemdSpline *spline,
                                 double t,
                                 size_t deriv,
                                 double *out);

/**
 * Copies the coefficients into `out` (capacity `len`, at least the basis count).
 *
 * # Safety
 * `spline` must be a live handle and `out` valid for `len` writes.
 */
enum HemdStatus hemd_spline_coeffs(const struct HemdSpline *spline, double *out, size_t len);

/**
 * Iterative slope upper envelope; `eps = INFINITY` gives the classic envelope.
 *
 * # Safety
 * `signal` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_upper_envelope(const struct HemdSpline *signal,
                                    double eps,
                                    struct HemdSpline **out);

/**
 * Lower envelope as the negated upper envelope of the negated signal.
 *
 * # Safety
 * `signal` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_lower_envelope(const struct HemdSpline *signal,
                                    double eps,
                                    struct HemdSpline **out);

/**
 * Instantaneous frequency of a unit-amplitude oscillation.
 *
 * # Safety
 * `unit_imf` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_frequency(const struct HemdSpline *unit_imf, struct HemdSpline **out);

/**
 * Full decomposition with envelope tolerance `eps` and at most `max_imfs` components.
 *
 * # Safety
 * `signal` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_decompose(const struct HemdSpline *signal,
                               double eps,
                               size_t max_imfs,
                               struct HemdDecomposition **out);

/**
 * # Safety
 * `d` must be null or a live decomposition handle.
 */
void hemd_decomposition_free(struct HemdDecomposition *d);

/**
 * Number of extracted components.
 *
 * # Safety
 * `d` must be a live handle.
 */
size_t hemd_decomposition_len(const struct HemdDecomposition *d);

/**
 * Copies one function of component `index` into a new spline handle.
 * Fails with `FrequencyFailed` when the component has no frequency.
 *
 * # Safety
 * `d` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_decomposition_component(const struct HemdDecomposition *d,
                                             size_t index,
                                             enum HemdPart part,
                                             struct HemdSpline **out);

/**
 * Writes `(μ₀, μ₁, μ₂)` of component `index` into `out[0..3]`.
 *
 * # Safety
 * `d` must be a live handle and `out` valid for 3 writes.
 */
enum HemdStatus hemd_decomposition_characteristic(const struct HemdDecomposition *d,
                                                  size_t index,
                                                  double *out);

/**
 * Copies the final residual into a new spline handle.
 *
 * # Safety
 * `d` must be a live handle and `out` valid handle storage.
 */
enum HemdStatus hemd_decomposition_residual(const struct HemdDecomposition *d,
                                            struct HemdSpline **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRID_EMD_H */
