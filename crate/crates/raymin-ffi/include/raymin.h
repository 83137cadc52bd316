#ifndef RAYMIN_H
#define RAYMIN_H

/* Generated by cbindgen from the raymin-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Anything but OK leaves a description in
 * `raymin_last_error_message`.
 */
typedef enum RayminStatus {
  RAYMIN_STATUS_OK = 0,
  /**
   * Bad input: null pointer, invalid query bounds, value domain.
   */
  RAYMIN_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Rejected configuration (precision gate, layout limits).
   */
  RAYMIN_STATUS_CONFIG = 2,
  /**
   * Internal or consistency failure.
   */
  RAYMIN_STATUS_INTERNAL = 3,
} RayminStatus;

/**
 * Strategy for the fully-covered middle blocks of a decomposed query.
 */
typedef enum RayminBlockMin {
  RAYMIN_BLOCK_MIN_GEOMETRY = 0,
  RAYMIN_BLOCK_MIN_LOOKUP_TABLE = 1,
} RayminBlockMin;

/**
 * Opaque input sequence handle.
 */
typedef struct RayminArray RayminArray;

/**
 * Opaque solver handle.
 */
typedef struct RayminSolver RayminSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *raymin_version(void);

/**
 * Short static description of a status code.
 */
const char *raymin_status_message(enum RayminStatus status);

/**
 * Detail message of the calling thread's most recent failure. Owned by
 * the library; valid until the next failing call on this thread.
 */
const char *raymin_last_error_message(void);

/**
 * Builds an array from 32-bit float values.
 *
 * # Safety
 * `values` must point to `len` readable floats; `out` must be a valid
 * destination for one pointer.
 */
enum RayminStatus raymin_array_from_f32(const float *values, size_t len, struct RayminArray **out);

/**
 * Builds an array from signed integers through the order-preserving
 * transform; inputs must lie in `[0, 2^31)`.
 *
 * # Safety
 * `values` must point to `len` readable integers; `out` must be a
 * valid destination for one pointer.
 */
enum RayminStatus raymin_array_from_i64(const int64_t *values,
                                        size_t len,
                                        struct RayminArray **out);

/**
 * Number of elements, or 0 for a null handle.
 */
size_t raymin_array_len(const struct RayminArray *arr);

/**
 * Releases an array handle (null is a no-op).
 *
 * # Safety
 * `arr` must be null or a pointer returned by an array constructor,
 * not yet freed.
 */
void raymin_array_free(struct RayminArray *arr);

/**
 * Builds a single-layout solver (requires len <= 2^24). The array is
 * copied; the handle stays owned by the caller.
 *
 * # Safety
 * `arr` must be a live array handle; `out` a valid destination.
 */
enum RayminStatus raymin_solver_create_single(const struct RayminArray *arr,
                                              struct RayminSolver **out);

/**
 * Builds a block-matrix solver. `block_size = 0` picks the largest
 * valid power of two; a nonzero size must pass the precision gate.
 *
 * # Safety
 * `arr` must be a live array handle; `out` a valid destination.
 */
enum RayminStatus raymin_solver_create_block(const struct RayminArray *arr,
                                             size_t block_size,
                                             enum RayminBlockMin blockmin,
                                             struct RayminSolver **out);

/**
 * Releases a solver handle (null is a no-op).
 *
 * # Safety
 * `solver` must be null or a pointer returned by a solver constructor,
 * not yet freed.
 */
void raymin_solver_free(struct RayminSolver *solver);

/**
 * Answers one query; writes the leftmost argmin and its value.
 *
 * # Safety
 * `solver` must be a live solver handle; `out_index` and `out_value`
 * must be valid destinations (either may be null to skip it).
 */
enum RayminStatus raymin_solve(const struct RayminSolver *solver,
                               uint32_t l,
                               uint32_t r,
                               uint32_t *out_index,
                               float *out_value);

/**
 * Answers `count` queries with `threads` workers (0 or 1 = serial),
 * writing results in input order.
 *
 * # Safety
 * `ls` and `rs` must point to `count` readable indices; `out_indices`
 * and `out_values`, when non-null, to `count` writable slots.
 */
enum RayminStatus raymin_solve_batch(const struct RayminSolver *solver,
                                     const uint32_t *ls,
                                     const uint32_t *rs,
                                     size_t count,
                                     size_t threads,
                                     uint32_t *out_indices,
                                     float *out_values);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAYMIN_H */
