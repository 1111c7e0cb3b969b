#ifndef EIKONAL_H
#define EIKONAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum EikStatus {
  EIK_STATUS_OK = 0,
  EIK_STATUS_NULL_POINTER = 1,
  EIK_STATUS_INVALID_ARGUMENT = 2,
  EIK_STATUS_PARSE = 3,
  EIK_STATUS_UNKNOWN_SCENARIO = 4,
  EIK_STATUS_IO = 5,
  /**
   * Graph, boundary or field rejected by the solver.
   */
  EIK_STATUS_MODEL = 6,
  EIK_STATUS_BUFFER_TOO_SMALL = 7,
  EIK_STATUS_PANIC = 8,
} EikStatus;

/**
 * A scenario: graph, weight field, boundary data and null sets.
 */
typedef struct EikScenario EikScenario;

/**
 * Lax solution on a scenario's graph.
 */
typedef struct EikSolution EikSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Free with
 * [`eik_string_free`].
 */
char *eik_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void eik_string_free(char *s);

/**
 * Builds a registered scenario. `h <= 0` selects its default resolution.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum EikStatus eik_scenario_builtin(const char *name, double h, struct EikScenario **out);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EikStatus eik_scenario_from_json(const char *json, struct EikScenario **out);

/**
 * # Safety
 * `s` must be NULL or a handle from this library not yet freed.
 */
void eik_scenario_free(struct EikScenario *s);

/**
 * # Safety
 * `s` must be a live scenario handle; `count` must be writable.
 */
enum EikStatus eik_scenario_vertex_count(const struct EikScenario *s, size_t *count);

/**
 * Writes the first two coordinates of vertex `v` to `xy[0..2]`.
 *
 * # Safety
 * `s` must be a live scenario handle; `xy` must point to two writable doubles.
 */
enum EikStatus eik_scenario_vertex_xy(const struct EikScenario *s, size_t v, double *xy);

/**
 * Optical distances `L_f(source, .)` for every vertex. Sets `written` to the
 * vertex count even when the buffer is too small.
 *
 * # Safety
 * `s` must be a live scenario handle; `buf` must hold `len` doubles;
 * `written` must be writable.
 */
enum EikStatus eik_optical_from_vertex(const struct EikScenario *s,
                                       size_t source,
                                       double quad_density,
                                       double *buf,
                                       size_t len,
                                       size_t *written);

/**
 * Solves the scenario's Dirichlet problem by the Lax formula.
 * `quad_density == 0` selects the default quadrature.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum EikStatus eik_solve(const struct EikScenario *s,
                         double quad_density,
                         struct EikSolution **out);

/**
 * # Safety
 * `sol` must be NULL or a handle from this library not yet freed.
 */
void eik_solution_free(struct EikSolution *sol);

/**
 * Copies `u` into `buf`; `+inf` marks vertices with no finite path to the
 * boundary.
 *
 * # Safety
 * `sol` must be a live solution handle; `buf` must hold `len` doubles;
 * `written` must be writable.
 */
enum EikStatus eik_solution_values(const struct EikSolution *sol,
                                   double *buf,
                                   size_t len,
                                   size_t *written);

/**
 * Whether boundary vertex `v` keeps its data (`u(v) = g(v)`).
 *
 * # Safety
 * `sol` must be a live solution handle; `result` must be writable.
 */
enum EikStatus eik_solution_in_sigma(const struct EikSolution *sol, size_t v, bool *result);

/**
 * Largest `u(x) - u(y) - L_f(x, y)` over edges, clamped at 0, and whether
 * the boundary data were compatible.
 *
 * # Safety
 * `sol` must be a live solution handle; the output pointers must be writable.
 */
enum EikStatus eik_solution_diagnostics(const struct EikSolution *sol,
                                        double *lax_violation,
                                        bool *compatible);

/**
 * Runs a registered scenario with its checks. `report_json` receives the
 * report (free with [`eik_string_free`]); it may be NULL.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `pass` must be writable;
 * `report_json` must be NULL or writable.
 */
enum EikStatus eik_run_scenario(const char *name, bool *pass, char **report_json);

/**
 * Library version, a static string.
 */
const char *eik_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIKONAL_H */
