#ifndef CUOPT_H
#define CUOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status of a solved linear program.
 */
typedef enum CuoptLpStatus {
  CUOPT_LP_STATUS_OPTIMAL = 0,
  CUOPT_LP_STATUS_INFEASIBLE = 1,
  CUOPT_LP_STATUS_UNBOUNDED = 2,
} CuoptLpStatus;

/**
 * Result code of every fallible call.
 */
typedef enum CuoptStatus {
  CUOPT_STATUS_OK = 0,
  CUOPT_STATUS_NULL_ARGUMENT = 1,
  CUOPT_STATUS_INVALID_UTF8 = 2,
  CUOPT_STATUS_PARSE_ERROR = 3,
  CUOPT_STATUS_INVALID_INSTANCE = 4,
  CUOPT_STATUS_DIMENSION_MISMATCH = 5,
  CUOPT_STATUS_UNSUPPORTED = 6,
  CUOPT_STATUS_INFEASIBLE = 7,
  CUOPT_STATUS_UNBOUNDED = 8,
  CUOPT_STATUS_NUMERICAL_FAILURE = 9,
  CUOPT_STATUS_BUFFER_TOO_SMALL = 10,
  CUOPT_STATUS_PANIC = 11,
} CuoptStatus;

/**
 * A parsed uncertainty instance.
 */
typedef struct CuoptInstance CuoptInstance;

/**
 * A linear program in the line-oriented text format.
 */
typedef struct CuoptLp CuoptLp;

/**
 * The result of [`cuopt_lp_solve`].
 */
typedef struct CuoptLpSolution CuoptLpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cuopt_version(void);

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cuopt_last_error_message(void);

/**
 * Stable lowercase name of a status code; "unknown" outside the enum.
 * Takes a plain integer so any value a C caller passes is well defined.
 */
const char *cuopt_status_name(int32_t status);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void cuopt_string_free(char *s);

/**
 * Parses an instance document; on success `*out` owns a new handle.
 *
 * # Safety
 * `json` must be null or NUL-terminated; `out` must be null or writable.
 */
enum CuoptStatus cuopt_instance_from_json(const char *json, struct CuoptInstance **out);

/**
 * Releases an instance handle. Null is ignored.
 *
 * # Safety
 * `inst` must be null or a live handle from [`cuopt_instance_from_json`].
 */
void cuopt_instance_free(struct CuoptInstance *inst);

/**
 * Canonical JSON of the instance.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_instance_to_json(const struct CuoptInstance *inst, char **out);

/**
 * Process kind tag ("ellipsoidal_center", "moment", ...) as a static string, or null for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
const char *cuopt_instance_kind(const struct CuoptInstance *inst);

/**
 * Number of periods and uncertainty dimension.
 *
 * # Safety
 * `inst` must be a live handle; `periods` and `dim` must be writable.
 */
enum CuoptStatus cuopt_instance_shape(const struct CuoptInstance *inst,
                                      size_t *periods,
                                      size_t *dim);

/**
 * Counterpart value at the instance decision: the robust LHS for the
 * ellipsoidal and polyhedral kinds, the nested worst-case expectation for
 * moment instances.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_counterpart_value(const struct CuoptInstance *inst, double *out);

/**
 * Counterpart constraint system as JSON (the `reformulate` output).
 * `conservative` selects the per-stage dual for moment instances.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_reformulate(const struct CuoptInstance *inst, bool conservative, char **out);

/**
 * Counterpart value next to its oracles, as JSON (the `worst-case` output).
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_worst_case(const struct CuoptInstance *inst,
                                  size_t samples,
                                  uint64_t seed,
                                  char **out);

/**
 * Solves a knapsack instance document; writes the solution as JSON.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum CuoptStatus cuopt_solve_knapsack(const char *json, char **out);

/**
 * Runs the knapsack sweeps and writes the CSV table. A null `config_json`
 * uses the default configuration.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` must be writable.
 */
enum CuoptStatus cuopt_run_knapsack(const char *config_json, char **out);

/**
 * Runs the portfolio grid and writes the CSV table. A null `config_json`
 * uses the default configuration.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` must be writable.
 */
enum CuoptStatus cuopt_run_portfolio(const char *config_json, char **out);

/**
 * Parses an LP in the text format; on success `*out` owns a new handle.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum CuoptStatus cuopt_lp_parse(const char *text, struct CuoptLp **out);

/**
 * Releases an LP handle. Null is ignored.
 *
 * # Safety
 * `lp` must be null or a live handle from [`cuopt_lp_parse`].
 */
void cuopt_lp_free(struct CuoptLp *lp);

/**
 * Number of columns of the LP.
 *
 * # Safety
 * `lp` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_lp_num_cols(const struct CuoptLp *lp, size_t *out);

/**
 * Solves the LP. Infeasible and unbounded programs still succeed; inspect
 * [`cuopt_lp_solution_status`].
 *
 * # Safety
 * `lp` must be a live handle; `out` must be writable.
 */
enum CuoptStatus cuopt_lp_solve(const struct CuoptLp *lp, struct CuoptLpSolution **out);

/**
 * Releases a solution handle. Null is ignored.
 *
 * # Safety
 * `sol` must be null or a live handle from [`cuopt_lp_solve`].
 */
void cuopt_lp_solution_free(struct CuoptLpSolution *sol);

/**
 * Status and objective value (meaningful only when optimal).
 *
 * # Safety
 * `sol` must be a live handle; `status` and `objective` must be writable.
 */
enum CuoptStatus cuopt_lp_solution_status(const struct CuoptLpSolution *sol,
                                          enum CuoptLpStatus *status,
                                          double *objective);

/**
 * Copies the primal point into `buf`. `len` must be at least the column
 * count; otherwise nothing is written and `BufferTooSmall` is returned.
 *
 * # Safety
 * `sol` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum CuoptStatus cuopt_lp_solution_x(const struct CuoptLpSolution *sol, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUOPT_H */
