#ifndef CHARP_QKZ_H
#define CHARP_QKZ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum CqStatus {
  CQ_STATUS_OK = 0,
  CQ_STATUS_NULL_POINTER = 1,
  CQ_STATUS_INVALID_ARGUMENT = 2,
  CQ_STATUS_NOT_PRIME = 3,
  CQ_STATUS_OUT_OF_RANGE = 4,
  /**
   * A mathematical precondition failed, e.g. `κ` outside `F_p` where a
   * prime-field step is needed.
   */
  CQ_STATUS_DOMAIN = 5,
  CQ_STATUS_INTERNAL = 6,
} CqStatus;

/**
 * Parameters `(p, n, κ)`.
 */
typedef struct CqParams CqParams;

/**
 * The p-hypergeometric solutions for one parameter triple.
 */
typedef struct CqSolutions CqSolutions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *cq_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void cq_string_free(char *s);

/**
 * Creates parameters. `kappa` is `"c"` or `"a+b*g"` with `g` the generator
 * of `F_{p^2}` over `F_p`.
 *
 * # Safety
 * `kappa` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CqStatus cq_params_new(uint64_t p, size_t n, const char *kappa, struct CqParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`cq_params_new`], not yet freed.
 */
void cq_params_free(struct CqParams *params);

/**
 * `k` with `κk ≡ -1 (mod p)`; [`CqStatus::Domain`] when `κ ∉ F_p`.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_params_k(const struct CqParams *params, uint64_t *out);

/**
 * Number of p-hypergeometric solutions `d(κ)`.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_params_d(const struct CqParams *params, size_t *out);

/**
 * Extracts the solutions `Q^{ℓp-1}`, `ℓ = 1..d(κ)`.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_solve(const struct CqParams *params, struct CqSolutions **out);

/**
 * # Safety
 * `sols` must be null or a handle from [`cq_solve`], not yet freed.
 */
void cq_solutions_free(struct CqSolutions *sols);

/**
 * # Safety
 * `sols` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_solutions_len(const struct CqSolutions *sols, size_t *out);

/**
 * Canonical text of coordinate `coord` (0-based) of solution `index`
 * (0-based, i.e. `ℓ - 1`).
 *
 * # Safety
 * `sols` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_solution_coordinate(const struct CqSolutions *sols,
                                     size_t index,
                                     size_t coord,
                                     char **out);

/**
 * Evaluates solution `index` at a point of `F_{p^2}^n`. Elements are
 * passed as pairs `(a0, a1)` meaning `a0 + a1 g`, so `z` and `out` hold
 * `2n` integers each.
 *
 * # Safety
 * `z` must point to `z_len` readable integers and `out` to `out_len`
 * writable ones.
 */
enum CqStatus cq_solution_eval(const struct CqSolutions *sols,
                               size_t index,
                               const uint64_t *z,
                               size_t z_len,
                               uint64_t *out,
                               size_t out_len);

/**
 * The solution set as JSON (`schema`, `p`, `n`, `kappa`, `k`, `d`, `solutions`).
 *
 * # Safety
 * `sols` must be a live handle and `out` a valid pointer.
 */
enum CqStatus cq_solutions_json(const struct CqSolutions *sols, char **out);

/**
 * Runs verification suites over a sweep and writes the JSON report.
 * `primes` and `ns` list the sweep; `kappas` and `suite_names` are
 * comma-separated lists, or null for all. `passed` receives the verdict.
 *
 * # Safety
 * Array arguments must point to the given number of readable elements;
 * strings must be null or NUL-terminated; `passed` and `report` must be
 * valid pointers.
 */
enum CqStatus cq_verify(const uint64_t *primes,
                        size_t primes_len,
                        const size_t *ns,
                        size_t ns_len,
                        const char *kappas,
                        const char *suite_names,
                        uint64_t seed,
                        size_t points,
                        bool *passed,
                        char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHARP_QKZ_H */
