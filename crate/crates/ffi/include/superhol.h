/* Generated by cbindgen; do not edit. */

#ifndef SUPERHOL_H
#define SUPERHOL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SuperholStatus {
  SUPERHOL_STATUS_OK = 0,
  SUPERHOL_STATUS_NULL_POINTER = 1,
  SUPERHOL_STATUS_INVALID_UTF8 = 2,
  SUPERHOL_STATUS_SCHEMA = 3,
  SUPERHOL_STATUS_REGISTRY = 4,
  SUPERHOL_STATUS_IO = 5,
  SUPERHOL_STATUS_DIMENSION = 6,
  SUPERHOL_STATUS_PARITY = 7,
  SUPERHOL_STATUS_DOMAIN = 8,
  SUPERHOL_STATUS_CHART_EXIT = 9,
  SUPERHOL_STATUS_CONSISTENCY = 10,
  SUPERHOL_STATUS_VALIDATION = 11,
  SUPERHOL_STATUS_LOOP_VALIDATION = 12,
  SUPERHOL_STATUS_RANGE = 13,
  SUPERHOL_STATUS_NUMERIC = 14,
  SUPERHOL_STATUS_PANIC = 15,
} SuperholStatus;

/**
 * An element of the Grassmann algebra on `q ≤ 8` generators.
 */
typedef struct SuperholGrassmann SuperholGrassmann;

/**
 * A parsed scenario.
 */
typedef struct SuperholScenario SuperholScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *superhol_last_error(void);

/**
 * Library version as a static string.
 */
const char *superhol_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void superhol_string_free(char *s);

/**
 * Parses a scenario document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum SuperholStatus superhol_scenario_from_json(const char *json, struct SuperholScenario **out);

/**
 * Looks up a built-in scenario, or loads a scenario file when `name` is a
 * path.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum SuperholStatus superhol_scenario_resolve(const char *name, struct SuperholScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library, freed only once.
 */
void superhol_scenario_free(struct SuperholScenario *scenario);

/**
 * The scenario serialized back to JSON.
 *
 * # Safety
 * `scenario` must be a valid handle and `out` a valid pointer.
 */
enum SuperholStatus superhol_scenario_to_json(const struct SuperholScenario *scenario, char **out);

/**
 * Runs every check and writes the report as JSON to `report`. Failing
 * checks are reported, not returned as errors. `options` may be null or a
 * JSON object with any of `out`, `steps`, `grid`, `normalization` and
 * `tolerance_scale`.
 *
 * # Safety
 * `scenario` must be a valid handle, `options` null or a nul-terminated
 * string, and `report` a valid pointer.
 */
enum SuperholStatus superhol_scenario_run(const struct SuperholScenario *scenario,
                                          const char *options,
                                          char **report);

/**
 * Built-in scenarios and those in `registry` (may be null) as a JSON array.
 *
 * # Safety
 * `registry` must be null or a nul-terminated string; `out` a valid pointer.
 */
enum SuperholStatus superhol_scenario_list(const char *registry, char **out);

/**
 * The zero element on `q` generators.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SuperholStatus superhol_grassmann_new(size_t q, struct SuperholGrassmann **out);

/**
 * # Safety
 * `element` must be null or a handle from this library, freed only once.
 */
void superhol_grassmann_free(struct SuperholGrassmann *element);

/**
 * Sets the coefficient of the monomial whose generators are the set bits
 * of `mask`.
 *
 * # Safety
 * `element` must be a valid handle.
 */
enum SuperholStatus superhol_grassmann_set(struct SuperholGrassmann *element,
                                           size_t mask,
                                           double re,
                                           double im);

/**
 * # Safety
 * `element` must be a valid handle; `re` and `im` valid pointers.
 */
enum SuperholStatus superhol_grassmann_get(const struct SuperholGrassmann *element,
                                           size_t mask,
                                           double *re,
                                           double *im);

/**
 * Product `a·b`, a new handle.
 *
 * # Safety
 * `a` and `b` must be valid handles and `out` a valid pointer.
 */
enum SuperholStatus superhol_grassmann_mul(const struct SuperholGrassmann *a,
                                           const struct SuperholGrassmann *b,
                                           struct SuperholGrassmann **out);

/**
 * Largest supported generator count.
 */
size_t superhol_grassmann_max_generators(void);

/**
 * `exp` of an even form given as JSON, `{"n", "d", "coeffs": [{"mask",
 * "matrix": [[{"re", "im"}]]}]}`; the result uses the same layout.
 *
 * # Safety
 * `form` must be a nul-terminated string and `out` a valid pointer.
 */
enum SuperholStatus superhol_form_exp_even(const char *form, char **out);

/**
 * Bouquet entry of U(1) acting on a point through `weights`, at
 * `g = e^{iφ}` and `X = iξ`; its value is `Σ_k e^{i n_k (φ + ξ)}`.
 *
 * # Safety
 * `weights` must point to `len` integers; `re` and `im` must be valid.
 */
enum SuperholStatus superhol_point_character(const int64_t *weights,
                                             size_t len,
                                             double phi,
                                             double xi,
                                             double *re,
                                             double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPERHOL_H */
