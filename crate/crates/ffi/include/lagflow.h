#ifndef LAGFLOW_H
#define LAGFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LagflowStatus {
  LAGFLOW_STATUS_OK = 0,
  LAGFLOW_STATUS_NULL_ARGUMENT = 1,
  LAGFLOW_STATUS_INVALID_INPUT = 2,
  LAGFLOW_STATUS_PARSE = 3,
  LAGFLOW_STATUS_NON_CONVEX = 4,
  LAGFLOW_STATUS_PROJECTION = 5,
  LAGFLOW_STATUS_INCOMPATIBLE = 6,
  LAGFLOW_STATUS_ABORTED = 7,
  LAGFLOW_STATUS_GRID_MISMATCH = 8,
  LAGFLOW_STATUS_IO = 9,
  LAGFLOW_STATUS_PANIC = 10,
} LagflowStatus;

/**
 * Opaque flow handle.
 */
typedef struct LagflowFlow LagflowFlow;

/**
 * One `monitors.csv` row.
 */
typedef struct LagflowMonitors {
  size_t step;
  double t;
  double dt;
  double min_f;
  double max_f;
  double osc_f;
  double lambda1_min;
  double lambda1_max;
  double oblique_min;
  double hess_min;
  double hess_max;
  double bc_residual_max;
} LagflowMonitors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread; empty after a success.
 * The pointer stays valid until the next `lagflow_*` call on the same thread.
 */
const char *lagflow_last_error(void);

const char *lagflow_version(void);

/**
 * Builds the initial flow state described by configuration text. Relative
 * paths in the text resolve against the working directory.
 *
 * # Safety
 * `config` must be a NUL-terminated string; `out` must be writable.
 */
enum LagflowStatus lagflow_flow_new(const char *config, struct LagflowFlow **out);

/**
 * # Safety
 * `flow` must come from [`lagflow_flow_new`] and not be used afterwards; null is ignored.
 */
void lagflow_flow_free(struct LagflowFlow *flow);

/**
 * Takes up to `steps` explicit steps, stopping early once converged.
 *
 * # Safety
 * `flow` must be a live handle; `converged` may be null.
 */
enum LagflowStatus lagflow_flow_step(struct LagflowFlow *flow, size_t steps, int *converged);

/**
 * Steps until convergence or the configured `max_steps`.
 *
 * # Safety
 * `flow` must be a live handle; `converged` may be null.
 */
enum LagflowStatus lagflow_flow_run(struct LagflowFlow *flow, int *converged);

/**
 * # Safety
 * `flow` must be a live handle; `out` must be writable.
 */
enum LagflowStatus lagflow_flow_monitors(const struct LagflowFlow *flow,
                                         struct LagflowMonitors *out);

/**
 * Whether every a priori estimate holds on the current slice.
 *
 * # Safety
 * `flow` must be a live handle; `passed` must be writable.
 */
enum LagflowStatus lagflow_flow_estimates_passed(const struct LagflowFlow *flow, int *passed);

/**
 * Number of grid nodes.
 *
 * # Safety
 * `flow` must be a live handle or null (returns 0).
 */
size_t lagflow_flow_node_count(const struct LagflowFlow *flow);

/**
 * Mean phase of the current slice: the estimate of the translation speed `c`.
 *
 * # Safety
 * `flow` must be a live handle; `c` must be writable.
 */
enum LagflowStatus lagflow_flow_speed(const struct LagflowFlow *flow, double *c);

/**
 * Copies node positions (`x`, `y` interleaved, `2·node_count` entries) and
 * values (`node_count` entries). Either buffer may be null.
 *
 * # Safety
 * Non-null buffers must hold the stated number of doubles.
 */
enum LagflowStatus lagflow_flow_nodes(const struct LagflowFlow *flow,
                                      double *positions,
                                      double *values,
                                      size_t len);

/**
 * Newton solve of the steady problem from the current slice.
 *
 * # Safety
 * `flow` must be a live handle; `c` and `converged` must be writable.
 */
enum LagflowStatus lagflow_steady_from_flow(const struct LagflowFlow *flow,
                                            double *c,
                                            int *converged);

/**
 * Same as the `lagflow` binary: runs `mode` (null: the configured mode) and
 * writes artifacts under `out_dir`. `passed` receives the exit-status verdict.
 *
 * # Safety
 * Strings must be NUL-terminated; `passed` must be writable.
 */
enum LagflowStatus lagflow_run_config(const char *config_path,
                                      const char *mode,
                                      const char *out_dir,
                                      int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAGFLOW_H */
