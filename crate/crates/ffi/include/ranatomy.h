#ifndef RANATOMY_H
#define RANATOMY_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome class of an analysis.
 */
typedef enum RanatomyOutcome {
  RANATOMY_OUTCOME_OK = 0,
  RANATOMY_OUTCOME_NOT_R_CODE = 1,
  RANATOMY_OUTCOME_ENCODING_ERROR = 2,
  RANATOMY_OUTCOME_DOCUMENTATION_COMMAND = 3,
  RANATOMY_OUTCOME_RAW_SYNTAX_ERROR = 4,
  RANATOMY_OUTCOME_RESOURCE_LIMIT = 5,
  RANATOMY_OUTCOME_TIMEOUT = 6,
  RANATOMY_OUTCOME_CRASH = 7,
  RANATOMY_OUTCOME_UNREADABLE = 8,
} RanatomyOutcome;

typedef enum RanatomyStatus {
  RANATOMY_STATUS_OK = 0,
  RANATOMY_STATUS_NULL_ARGUMENT = 1,
  RANATOMY_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The source did not parse; the handle is still filled in.
   */
  RANATOMY_STATUS_PARSE_FAILED = 3,
  /**
   * Resource limit, time budget or an internal fault; handle filled in.
   */
  RANATOMY_STATUS_DATAFLOW_FAILED = 4,
  RANATOMY_STATUS_NOT_FOUND = 5,
  RANATOMY_STATUS_PANIC = 6,
} RanatomyStatus;

/**
 * Opaque analysis result.
 */
typedef struct RanatomyAnalysis RanatomyAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *ranatomy_version(void);

/**
 * Static description of a status code.
 */
const char *ranatomy_status_message(enum RanatomyStatus status);

/**
 * Parse, build the dataflow graph and take the feature census of
 * `source[0..len]`. On `OK`, `PARSE_FAILED` and `DATAFLOW_FAILED` a handle
 * is stored in `*out`; release it with `ranatomy_analysis_free`.
 *
 * # Safety
 * `source` must point to `len` readable bytes (or be null with `len` 0);
 * `out` must be a valid pointer.
 */
enum RanatomyStatus ranatomy_analyze(const uint8_t *source,
                                     size_t len,
                                     struct RanatomyAnalysis **out);

/**
 * # Safety
 * `analysis` must be null or a live handle.
 */
enum RanatomyOutcome ranatomy_analysis_outcome(const struct RanatomyAnalysis *analysis);

/**
 * `{"status": ..., "report": ...}` as JSON, owned by the handle.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
const char *ranatomy_analysis_json(const struct RanatomyAnalysis *analysis);

/**
 * Read one report value by JSON pointer, e.g. `/loops/for_count` or
 * `/fun_defs/hook_defs/.onLoad`. Booleans read as 0/1, lists as their
 * length. `NOT_FOUND` for a missing key or a failed analysis.
 *
 * # Safety
 * `analysis` must be a live handle, `pointer` a NUL-terminated string and
 * `value` a valid pointer.
 */
enum RanatomyStatus ranatomy_analysis_get(const struct RanatomyAnalysis *analysis,
                                          const char *pointer,
                                          double *value);

/**
 * # Safety
 * `analysis` must be null or a handle from `ranatomy_analyze` not yet freed.
 */
void ranatomy_analysis_free(struct RanatomyAnalysis *analysis);

/**
 * Two-sided Fisher exact p for [[a, b], [c, d]] and the phi coefficient
 * (NaN when a margin is zero).
 *
 * # Safety
 * `p_value` and `phi` must be valid pointers.
 */
enum RanatomyStatus ranatomy_fisher_exact(uint64_t a,
                                          uint64_t b,
                                          uint64_t c,
                                          uint64_t d,
                                          double *p_value,
                                          double *phi);

/**
 * Two-sided Mann-Whitney U test; `u` is the statistic of `xs`.
 *
 * # Safety
 * `xs`/`ys` must point to `nx`/`ny` readable doubles; `u` and `p_value`
 * must be valid pointers.
 */
enum RanatomyStatus ranatomy_mann_whitney(const double *xs,
                                          size_t nx,
                                          const double *ys,
                                          size_t ny,
                                          double *u,
                                          double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANATOMY_H */
