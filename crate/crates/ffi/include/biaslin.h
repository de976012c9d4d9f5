#ifndef BIASLIN_H
#define BIASLIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BlStatus {
  BlStatus_Ok = 0,
  /**
   * Bad input (out of range, malformed rational, failed precondition).
   */
  BlStatus_InvalidArgument = 1,
  /**
   * A computation failed (search exhausted, factorization, ...).
   */
  BlStatus_ComputationFailed = 2,
  BlStatus_NullPointer = 3,
  /**
   * A panic was caught at the boundary.
   */
  BlStatus_Panic = 4,
} BlStatus;

/**
 * Opaque distribution handle.
 */
typedef struct BlDistribution BlDistribution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty after success. The
 * pointer stays valid until the next library call on the same thread.
 */
const char *bl_last_error_message(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void bl_string_free(char *s);

/**
 * Releases a distribution. Null is ignored.
 *
 * # Safety
 * `d` must come from this library and not have been freed.
 */
void bl_distribution_free(struct BlDistribution *d);

/**
 * Uniform distribution over even-weight vectors of length `k`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum BlStatus bl_distribution_uniform(uintptr_t k, struct BlDistribution **out);

/**
 * Hamming-symmetric case construction for `(k, p)`.
 *
 * # Safety
 * `p` must be a NUL-terminated string; `out` valid for writes.
 */
enum BlStatus bl_distribution_case(uintptr_t k, const char *p, struct BlDistribution **out);

/**
 * Composed construction for `k >= 6`.
 *
 * # Safety
 * `p` must be a NUL-terminated string; `out` valid for writes.
 */
enum BlStatus bl_distribution_composed(uintptr_t k, const char *p, struct BlDistribution **out);

/**
 * Any pairwise-independent member for admissible `(k, p)`.
 *
 * # Safety
 * `p` must be a NUL-terminated string; `out` valid for writes.
 */
enum BlStatus bl_distribution_pairwise(uintptr_t k, const char *p, struct BlDistribution **out);

/**
 * Four-query mixture; `p1` may be null for the default.
 *
 * # Safety
 * `p` (and `p1` when non-null) must be NUL-terminated strings; `out` valid
 * for writes.
 */
enum BlStatus bl_distribution_dfh19(const char *p, const char *p1, struct BlDistribution **out);

/**
 * Parses and validates a distribution file's contents.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for writes.
 */
enum BlStatus bl_distribution_from_json(const char *json, struct BlDistribution **out);

/**
 * Serializes to the distribution file format.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
enum BlStatus bl_distribution_to_json(const struct BlDistribution *d, char **out);

/**
 * Number of queries `k`.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
enum BlStatus bl_distribution_k(const struct BlDistribution *d, uintptr_t *out);

/**
 * `max_{i != j} P[X_i = X_j]` as `"a/b"`.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
enum BlStatus bl_distribution_eta(const struct BlDistribution *d, char **out);

/**
 * Pairwise-independent coordinates as a bitmask: bit `i` set for
 * coordinate `i + 1`. Requires `k <= 64`.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
enum BlStatus bl_distribution_pairwise_independent(const struct BlDistribution *d, uint64_t *out);

/**
 * Whether some member of `D(p, k)` is pairwise independent.
 *
 * # Safety
 * `p` must be a NUL-terminated string; `out` valid for writes.
 */
enum BlStatus bl_feasible(uintptr_t k, const char *p, bool *out);

/**
 * Exact `E[prod_i H_{s_i}(Z_i)]` with every off-diagonal covariance equal
 * to `rho`, written as `"a/b"`.
 *
 * # Safety
 * `s` must point to `len` values; `rho` must be a NUL-terminated string;
 * `out` valid for writes.
 */
enum BlStatus bl_hermite_moment(const uint32_t *s, uintptr_t len, const char *rho, char **out);

/**
 * Exact `E[prod_i f(X_i)]` for `f = chi_S` on `{0,1}^n`, `S` given as a
 * table bitmask (coordinate 1 most significant). With `negated`, every
 * query coordinate is flipped before evaluation.
 *
 * # Safety
 * `d` must be a live handle; `out` valid for writes.
 */
enum BlStatus bl_chi_test(const struct BlDistribution *d,
                          uintptr_t n,
                          uint64_t mask,
                          bool negated,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIASLIN_H */
