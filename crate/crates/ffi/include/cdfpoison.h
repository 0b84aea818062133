#ifndef CDFPOISON_H
#define CDFPOISON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdfAttackMethod {
  CDF_ATTACK_METHOD_SINGLE = 0,
  CDF_ATTACK_METHOD_GREEDY = 1,
  CDF_ATTACK_METHOD_SEGE_EXACT = 2,
  CDF_ATTACK_METHOD_SEGE_HEURISTIC = 3,
  CDF_ATTACK_METHOD_SEGE_RELAXED = 4,
  CDF_ATTACK_METHOD_OPTIMAL = 5,
  CDF_ATTACK_METHOD_OPTIMAL_RELAXED = 6,
  CDF_ATTACK_METHOD_BRUTEFORCE = 7,
} CdfAttackMethod;

typedef enum CdfBoundMethod {
  CDF_BOUND_METHOD_GOLDEN = 0,
  CDF_BOUND_METHOD_BINARY = 1,
  CDF_BOUND_METHOD_EXACT = 2,
} CdfBoundMethod;

/**
 * Result of every fallible call.
 */
typedef enum CdfStatus {
  CDF_STATUS_OK = 0,
  CDF_STATUS_NULL_POINTER = 1,
  CDF_STATUS_INVALID_INPUT = 2,
  CDF_STATUS_SEARCH_SPACE_TOO_LARGE = 3,
  CDF_STATUS_NO_FEASIBLE_POISON = 4,
  CDF_STATUS_BUFFER_TOO_SMALL = 5,
  CDF_STATUS_PANIC = 6,
} CdfStatus;

/**
 * Opaque handle to a validated key set.
 */
typedef struct CdfKeySet CdfKeySet;

/**
 * Least-squares line `rank ≈ w·key + b` and its mean squared error.
 */
typedef struct CdfFit {
  double w;
  double b;
  double mse;
} CdfFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validates `len` strictly increasing keys and stores a new handle in
 * `*out`.
 *
 * # Safety
 * `keys` must point to `len` readable values and `out` must be writable.
 */
enum CdfStatus cdf_keyset_new(const uint64_t *keys, size_t len, struct CdfKeySet **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `keys` must come from [`cdf_keyset_new`] and not be used afterwards.
 */
void cdf_keyset_free(struct CdfKeySet *keys);

/**
 * Number of keys, or 0 for a null handle.
 *
 * # Safety
 * `keys` must be null or a live handle.
 */
size_t cdf_keyset_len(const struct CdfKeySet *keys);

/**
 * Least-squares fit of ranks on the keys.
 *
 * # Safety
 * `keys` must be a live handle and `out` writable.
 */
enum CdfStatus cdf_fit(const struct CdfKeySet *keys, struct CdfFit *out);

/**
 * Loss-maximizing single poison. Returns `NO_FEASIBLE_POISON` when no free
 * interior integer raises the loss.
 *
 * # Safety
 * `keys` must be a live handle and `point` writable.
 */
enum CdfStatus cdf_single_point(const struct CdfKeySet *keys, uint64_t *point);

/**
 * Runs an attack with `budget` poisons. The poison keys, sorted and with
 * repetition for relaxed methods, are written to `out` (capacity `cap`), their count to `*len` and the
 * poisoned loss to `*mse`. If `cap` is too small, `*len` still receives the
 * required size and `BUFFER_TOO_SMALL` is returned. `limit` caps the
 * enumeration of exhaustive methods; 0 selects the default.
 *
 * # Safety
 * `keys` must be a live handle, `out` must hold `cap` values, and `len`
 * and `mse` must be writable.
 */
enum CdfStatus cdf_attack(const struct CdfKeySet *keys,
                          enum CdfAttackMethod method,
                          uint64_t budget,
                          uint64_t limit,
                          uint64_t *out,
                          size_t cap,
                          size_t *len,
                          double *mse);

/**
 * Upper bound on the loss any attack with `budget` poisons can reach.
 *
 * # Safety
 * `keys` must be a live handle and `value` writable.
 */
enum CdfStatus cdf_upper_bound(const struct CdfKeySet *keys,
                               uint64_t budget,
                               enum CdfBoundMethod method,
                               uint32_t iters,
                               double *value);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to fit, into `buf`. Returns the full message length without
 * the terminator.
 *
 * # Safety
 * `buf` must be null or hold `cap` bytes.
 */
size_t cdf_last_error(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDFPOISON_H */
