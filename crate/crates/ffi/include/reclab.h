#ifndef RECLAB_H
#define RECLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ReclabStatus {
  RECLAB_STATUS_OK = 0,
  RECLAB_STATUS_INVALID_ARGUMENT = 1,
  RECLAB_STATUS_INVALID_MODE = 2,
  RECLAB_STATUS_OUT_OF_RANGE = 3,
  RECLAB_STATUS_UNREACHABLE_TARGET = 4,
  RECLAB_STATUS_PRECISION_BUDGET = 5,
  RECLAB_STATUS_INSUFFICIENT_SIGNAL = 6,
  RECLAB_STATUS_CONFIG = 7,
  RECLAB_STATUS_IO = 8,
  RECLAB_STATUS_INTERNAL = 9,
  RECLAB_STATUS_NULL_POINTER = 10,
  RECLAB_STATUS_PANIC = 11,
} ReclabStatus;

/**
 * A streaming orbit.
 */
typedef struct ReclabOrbit ReclabOrbit;

/**
 * A dynamical system.
 */
typedef struct ReclabSystem ReclabSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * owned by the library and valid until the next failing call.
 */
const char *reclab_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *reclab_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void reclab_string_free(char *s);

/**
 * Creates a system by name: `gauss`, `beta_golden`, `doubling`, `toral_diag23`.
 *
 * # Safety
 * `name` must be a nul-terminated string; `out` must be writable.
 */
enum ReclabStatus reclab_system_new(const char *name, struct ReclabSystem **out);

/**
 * # Safety
 * `sys` must come from [`reclab_system_new`] and not have been freed.
 */
void reclab_system_free(struct ReclabSystem *sys);

/**
 * Dimension of the phase space, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t reclab_system_dim(const struct ReclabSystem *sys);

/**
 * Invariant density `h(x)`.
 *
 * # Safety
 * `x` must point to `dim` doubles; `out` must be writable.
 */
enum ReclabStatus reclab_density(const struct ReclabSystem *sys,
                                 const double *x,
                                 size_t dim,
                                 double *out);

/**
 * One float64 step `T x`; the branch digit goes to `digit` when non-null.
 *
 * # Safety
 * `x` and `out` must point to `dim` doubles.
 */
enum ReclabStatus reclab_step(const struct ReclabSystem *sys,
                              const double *x,
                              size_t dim,
                              double *out,
                              uint64_t *digit);

/**
 * `mu(R ∩ [0,1]^d)` for the box with corners `lo`, `hi`.
 *
 * # Safety
 * `lo` and `hi` must point to `dim` doubles; `out` must be writable.
 */
enum ReclabStatus reclab_mu_rect(const struct ReclabSystem *sys,
                                 const double *lo,
                                 const double *hi,
                                 size_t dim,
                                 double *out);

/**
 * Solves `mu(R(x, l r)) = gamma`; writes `l` to `out_scale`.
 *
 * # Safety
 * `x` and `r` must point to `dim` doubles; `out_scale` must be writable.
 */
enum ReclabStatus reclab_scale_to_measure(const struct ReclabSystem *sys,
                                          const double *x,
                                          const double *r,
                                          size_t dim,
                                          double gamma,
                                          double *out_scale);

/**
 * Starts an orbit of `n` steps from `seed` (`"0.3"`, `"1/3"`, `"1/7,2/13"`).
 * `mode` is `float64`, `exact_modular`, `high_precision` or null for the
 * system default; `bits` is the high-precision budget.
 *
 * # Safety
 * Strings must be nul-terminated; `out` must be writable.
 */
enum ReclabStatus reclab_orbit_new(const struct ReclabSystem *sys,
                                   const char *seed,
                                   const char *mode,
                                   uint32_t bits,
                                   uint64_t n,
                                   struct ReclabOrbit **out);

/**
 * Writes the next point to `out` and sets `*done` to 0, or sets `*done`
 * to 1 once all `n` points have been produced.
 *
 * # Safety
 * `out` must point to `dim` doubles; `done` must be writable.
 */
enum ReclabStatus reclab_orbit_next(struct ReclabOrbit *orbit,
                                    double *out,
                                    size_t dim,
                                    int32_t *done);

/**
 * # Safety
 * `orbit` must come from [`reclab_orbit_new`] and not have been freed.
 */
void reclab_orbit_free(struct ReclabOrbit *orbit);

/**
 * Runs an experiment manifest (JSON) and returns the report as JSON in
 * `*report_json`, to be released with [`reclab_string_free`]. Sets
 * `*passed` to 1 when every verdict passes.
 *
 * # Safety
 * `config_json` must be nul-terminated; the out pointers must be writable.
 */
enum ReclabStatus reclab_run_experiment(const char *config_json,
                                        char **report_json,
                                        int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECLAB_H */
