#ifndef SRGOF_H
#define SRGOF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrgofStatus {
  SRGOF_STATUS_OK = 0,
  SRGOF_STATUS_NULL_POINTER = 1,
  SRGOF_STATUS_INVALID_ARGUMENT = 2,
  SRGOF_STATUS_CONFIG_ERROR = 3,
  SRGOF_STATUS_DATA_ERROR = 4,
  SRGOF_STATUS_PANIC = 5,
} SrgofStatus;

/**
 * Opaque sample handle: `rows` points of dimension `dim`.
 */
typedef struct SrgofSample SrgofSample;

/**
 * Parameters of `srgof_test`. String fields may be NULL to take the default.
 */
typedef struct SrgofTestParams {
  /**
   * "srct", "srpt", "oracle", "mmd" or "energy-perm"; NULL means "srpt".
   */
  const char *method;
  /**
   * Null distribution shorthand, e.g. "gaussian:d=1"; needed by "mmd" and "oracle".
   */
  const char *null_spec;
  /**
   * "gaussian" (default) or "spline".
   */
  const char *kernel;
  /**
   * "median" (default), "auto", "auto:<lo>:<hi>" or a comma-separated list.
   */
  const char *bandwidths;
  /**
   * "<lo>:<hi>" doubling grid or a comma-separated list; default "1e-6:5".
   */
  const char *lambdas;
  /**
   * "tikhonov" (default) or "showalter".
   */
  const char *regularizer;
  double alpha;
  /**
   * 0 selects the default.
   */
  size_t permutations;
  /**
   * 0 selects the default 65.
   */
  double c1;
  /**
   * 0 selects the default 1024.
   */
  size_t k_max;
  uint64_t seed;
} SrgofTestParams;

typedef struct SrgofDecision {
  bool reject;
  double statistic;
  double critical_value;
  double alpha;
} SrgofDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. Valid until the next failing call.
 */
const char *srgof_last_error(void);

/**
 * Copies `rows * dim` row-major values into a new sample handle.
 *
 * # Safety
 * `data` must point to `rows * dim` readable doubles; `out` must be writable.
 */
enum SrgofStatus srgof_sample_new(const double *data,
                                  size_t rows,
                                  size_t dim,
                                  struct SrgofSample **out);

/**
 * Draws `count` points from a distribution shorthand such as "vmf:d=3,k=2".
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum SrgofStatus srgof_sample_draw(const char *spec,
                                   size_t count,
                                   uint64_t seed,
                                   struct SrgofSample **out);

/**
 * # Safety
 * `sample` must come from this library and not be freed twice. NULL is ignored.
 */
void srgof_sample_free(struct SrgofSample *sample);

/**
 * # Safety
 * `sample` must be a live handle or NULL (returns 0).
 */
size_t srgof_sample_len(const struct SrgofSample *sample);

/**
 * # Safety
 * `sample` must be a live handle or NULL (returns 0).
 */
size_t srgof_sample_dim(const struct SrgofSample *sample);

/**
 * Fills `out` with defaults: srpt, Gaussian median bandwidth, λ grid 1e-6..5, α = 0.05.
 *
 * # Safety
 * `out` must be writable.
 */
enum SrgofStatus srgof_params_default(struct SrgofTestParams *out);

/**
 * Runs one test. `x0` and `y0` are the null samples for the mean and the
 * covariance; they may be NULL for "mmd" and "oracle", which only use `x`.
 *
 * # Safety
 * Pointers must be live handles (or NULL where allowed); `out` must be writable.
 */
enum SrgofStatus srgof_test(const struct SrgofTestParams *params,
                            const struct SrgofSample *x,
                            const struct SrgofSample *x0,
                            const struct SrgofSample *y0,
                            struct SrgofDecision *out);

/**
 * Runs an experiment given as TOML text and returns the power table as CSV.
 * `threads` = 0 uses all cores. Free the string with `srgof_string_free`.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `csv_out` must be writable.
 */
enum SrgofStatus srgof_power_csv(const char *config_toml, size_t threads, char **csv_out);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void srgof_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRGOF_H */
