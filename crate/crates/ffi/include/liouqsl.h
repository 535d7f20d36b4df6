#ifndef LIOUQSL_H
#define LIOUQSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LqStatus {
  LQ_STATUS_OK = 0,
  /**
   * Bad input: dimensions, non-physical states, malformed JSON.
   */
  LQ_STATUS_INVALID = 1,
  /**
   * The numerics failed (integration, defective generator, ...).
   */
  LQ_STATUS_NUMERICAL = 2,
  LQ_STATUS_NULL_POINTER = 3,
  /**
   * Output buffer too small; the required length is still reported.
   */
  LQ_STATUS_BUFFER_TOO_SMALL = 4,
  LQ_STATUS_PANIC = 5,
} LqStatus;

typedef struct LqDensity LqDensity;

typedef struct LqSpec LqSpec;

typedef struct LqQslReport {
  double t;
  double theta;
  double wootters_length;
  double avg_speed;
  double avg_nc_speed;
  double bound_mt;
  double bound_nc;
  double exact_time;
  double bound_opnorm;
  double bound_hsnorm;
  double efficiency;
} LqQslReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty when none. Valid
 * until the next failing call on the same thread.
 */
const char *lq_last_error(void);

/**
 * Parses a spec from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum LqStatus lq_spec_from_json(const char *json, struct LqSpec **out);

/**
 * Thermal amplitude damping with rates `γ(n+1)` and `γn`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LqStatus lq_spec_amplitude_damping(double gamma, double n, struct LqSpec **out);

/**
 * # Safety
 * `spec` must be null or a live handle.
 */
size_t lq_spec_dim(const struct LqSpec *spec);

/**
 * # Safety
 * `spec` must be null or a handle not yet freed.
 */
void lq_spec_free(struct LqSpec *spec);

/**
 * Validated density matrix from row-major parts; `im` may be null.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `dim*dim` doubles.
 */
enum LqStatus lq_density_new(size_t dim,
                             const double *re,
                             const double *im,
                             struct LqDensity **out);

/**
 * `α|0⟩ + √(1−α²)|1⟩` as a density matrix in dimension `dim`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LqStatus lq_density_alpha(double alpha, size_t dim, struct LqDensity **out);

/**
 * # Safety
 * `rho` must be null or a live handle.
 */
size_t lq_density_dim(const struct LqDensity *rho);

/**
 * Copies the matrix out row-major; both buffers need `capacity >= dim*dim`.
 *
 * # Safety
 * Buffers must hold `capacity` doubles.
 */
enum LqStatus lq_density_get(const struct LqDensity *rho, double *re, double *im, size_t capacity);

/**
 * # Safety
 * `rho` must be null or a handle not yet freed.
 */
void lq_density_free(struct LqDensity *rho);

/**
 * Liouville angle between two states.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum LqStatus lq_liouville_angle(const struct LqDensity *a, const struct LqDensity *b, double *out);

/**
 * Evolution speed `Δ𝓛` of `rho` under the generator at time `t`.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum LqStatus lq_speed(const struct LqSpec *spec,
                       const struct LqDensity *rho,
                       double t,
                       double *out);

/**
 * Speed-limit report for `rho` propagated to `t_max` on `points` (odd) grid points.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum LqStatus lq_qsl_report(const struct LqSpec *spec,
                            const struct LqDensity *rho,
                            double t_max,
                            size_t points,
                            struct LqQslReport *out);

/**
 * Liouvillian eigenvalues, slowest first. `count` receives d² even when
 * the buffers are too small.
 *
 * # Safety
 * Buffers must hold `capacity` doubles; `count` must be valid.
 */
enum LqStatus lq_eigenvalues(const struct LqSpec *spec,
                             double *re,
                             double *im,
                             size_t capacity,
                             size_t *count);

/**
 * Unique steady state of a static spec.
 *
 * # Safety
 * `spec` must be live and `out` valid.
 */
enum LqStatus lq_steady_state(const struct LqSpec *spec, struct LqDensity **out);

/**
 * Pure-state density matrix from amplitude parts of length `dim`; `im` may be null.
 *
 * # Safety
 * `re` (and `im` if non-null) must point to `dim` doubles.
 */
enum LqStatus lq_density_pure(size_t dim,
                              const double *re,
                              const double *im,
                              struct LqDensity **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIOUQSL_H */
