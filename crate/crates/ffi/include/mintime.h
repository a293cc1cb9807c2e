#ifndef MINTIME_H
#define MINTIME_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_ARGUMENT = 2,
  MT_STATUS_UNKNOWN_EXAMPLE = 3,
  MT_STATUS_NUMERIC_FAILURE = 4,
  MT_STATUS_IO = 5,
  MT_STATUS_CONFIG = 6,
  MT_STATUS_UNSUPPORTED = 7,
  MT_STATUS_PANIC = 8,
} MtStatus;

/**
 * Piecewise-linear minimum time function built from a flow.
 */
typedef struct MtField MtField;

/**
 * Reachable set rings of one run.
 */
typedef struct MtFlow MtFlow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *mt_last_error(void);

/**
 * Library version as a static string.
 */
const char *mt_version(void);

/**
 * Runs a registry example. `method` may be null and counts may be zero to
 * use the example's defaults.
 *
 * # Safety
 * `id` and a non-null `method` must be nul-terminated strings; `out` must be
 * valid for a write.
 */
enum MtStatus mt_flow_from_example(const char *id,
                                   const char *method,
                                   size_t k,
                                   size_t n,
                                   size_t n_r,
                                   size_t n_u,
                                   struct MtFlow **out);

/**
 * Runs a JSON run configuration, as accepted by the command line tool.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for a write.
 */
enum MtStatus mt_flow_from_config(const char *json, struct MtFlow **out);

/**
 * Releases a flow; null is ignored.
 *
 * # Safety
 * `flow` must come from this library and not be used afterwards.
 */
void mt_flow_free(struct MtFlow *flow);

/**
 * Number of rings, including the target ring 0.
 *
 * # Safety
 * Pointers must be valid.
 */
enum MtStatus mt_flow_ring_count(const struct MtFlow *flow, size_t *out);

/**
 * Time of ring `ring`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum MtStatus mt_flow_ring_time(const struct MtFlow *flow, size_t ring, double *out);

/**
 * Copies up to `capacity` vertices of ring `ring` as `x1, x2` pairs into
 * `xy` and stores the full vertex count in `len`. Call with `capacity = 0`
 * and `xy = NULL` to query the size.
 *
 * # Safety
 * `xy` must hold `2 * capacity` doubles when `capacity > 0`.
 */
enum MtStatus mt_flow_ring_vertices(const struct MtFlow *flow,
                                    size_t ring,
                                    double *xy,
                                    size_t capacity,
                                    size_t *len);

/**
 * Builds the minimum time function of a flow.
 *
 * # Safety
 * Pointers must be valid.
 */
enum MtStatus mt_field_new(const struct MtFlow *flow, struct MtField **out);

/**
 * Releases a field; null is ignored.
 *
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void mt_field_free(struct MtField *field);

/**
 * Minimum time at `(x1, x2)`; `INFINITY` outside the last ring.
 *
 * # Safety
 * Pointers must be valid.
 */
enum MtStatus mt_field_evaluate(const struct MtField *field, double x1, double x2, double *out);

/**
 * Analytic minimum time of a registry example; `INFINITY` when unreachable.
 *
 * # Safety
 * `id` must be a nul-terminated string; `out` must be valid for a write.
 */
enum MtStatus mt_oracle(const char *id, double x1, double x2, double *out);

/**
 * Reconstructs the extremal control for direction `dir` on ring `ring` and
 * stores the trajectory endpoint and the number of control switches.
 *
 * # Safety
 * `endpoint` must hold two doubles; other pointers must be valid.
 */
enum MtStatus mt_flow_reconstruct(const struct MtFlow *flow,
                                  size_t ring,
                                  size_t dir,
                                  double *endpoint,
                                  size_t *switches);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINTIME_H */
