#ifndef AMC_H
#define AMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum AmcStatus {
  AMC_STATUS_OK = 0,
  AMC_STATUS_NULL_POINTER = 1,
  AMC_STATUS_INVALID_ARGUMENT = 2,
  AMC_STATUS_DIMENSION = 3,
  /**
   * A restricted basis was singular or the data were otherwise unusable.
   */
  AMC_STATUS_NUMERICAL = 4,
  AMC_STATUS_UNKNOWN_NAME = 5,
  AMC_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  AMC_STATUS_INTERNAL = 7,
} AmcStatus;

/**
 * Dense row-major matrix handle.
 */
typedef struct AmcMatrix AmcMatrix;

/**
 * Outcome of one completion run.
 */
typedef struct AmcResult AmcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *amc_last_error_message(void);

/**
 * Static, NUL-terminated library version.
 */
const char *amc_version(void);

/**
 * Copies `rows * cols` row-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum AmcStatus amc_matrix_new(size_t rows, size_t cols, const double *data, struct AmcMatrix **out);

/**
 * Seeded random rank-`r` matrix whose column and row spaces carry the given
 * number of coherent (standard basis) directions.
 *
 * # Safety
 * `out` must be writable.
 */
enum AmcStatus amc_matrix_generate(size_t m,
                                   size_t n,
                                   size_t r,
                                   size_t coherent_cols,
                                   size_t coherent_rows,
                                   uint64_t seed,
                                   struct AmcMatrix **out);

/**
 * # Safety
 * `matrix` must be null or a handle from this library not yet freed.
 */
void amc_matrix_free(struct AmcMatrix *matrix);

/**
 * # Safety
 * `matrix` must be a live handle; `rows` and `cols` must be writable.
 */
enum AmcStatus amc_matrix_shape(const struct AmcMatrix *matrix, size_t *rows, size_t *cols);

/**
 * Copies the row-major entries into `buf`, which must hold `rows * cols` values.
 *
 * # Safety
 * `matrix` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum AmcStatus amc_matrix_copy_data(const struct AmcMatrix *matrix, double *buf, size_t len);

/**
 * Completes `matrix` with the named algorithm (`ks2013`, `ercs`, `err`,
 * `erre` or `erei`), observing entries through a metered uniform-cost oracle.
 *
 * # Safety
 * `matrix` must be a live handle, `algorithm` a NUL-terminated string and
 * `out` writable.
 */
enum AmcStatus amc_complete(const struct AmcMatrix *matrix,
                            const char *algorithm,
                            double eps,
                            uint64_t seed,
                            struct AmcResult **out);

/**
 * # Safety
 * `result` must be null or a handle from this library not yet freed.
 */
void amc_result_free(struct AmcResult *result);

/**
 * Number of entries observed and their total cost.
 *
 * # Safety
 * `result` must be a live handle; outputs must be writable.
 */
enum AmcStatus amc_result_observations(const struct AmcResult *result, size_t *count, double *cost);

/**
 * Estimated rank, success flag against the supplied matrix, and the largest
 * absolute entry error.
 *
 * # Safety
 * `result` must be a live handle; outputs must be writable.
 */
enum AmcStatus amc_result_summary(const struct AmcResult *result,
                                  size_t *rank,
                                  bool *success,
                                  double *max_abs_error);

/**
 * New matrix handle holding the completed matrix.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum AmcStatus amc_result_recovered(const struct AmcResult *result, struct AmcMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMC_H */
