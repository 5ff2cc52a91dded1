#ifndef OMAPF_H
#define OMAPF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum OmapfStatus {
  OMAPF_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8, unknown solver name and similar.
   */
  OMAPF_STATUS_INVALID_ARGUMENT = 1,
  OMAPF_STATUS_PARSE = 2,
  OMAPF_STATUS_IO = 3,
  /**
   * The run finished without a plan for some iteration.
   */
  OMAPF_STATUS_UNSOLVABLE = 4,
  OMAPF_STATUS_TIMEOUT = 5,
  OMAPF_STATUS_INTERNAL = 6,
  /**
   * A panic was caught at the boundary.
   */
  OMAPF_STATUS_PANIC = 7,
} OmapfStatus;

/**
 * A loaded online instance.
 */
typedef struct OmapfInstance OmapfInstance;

/**
 * The outcome of one online run.
 */
typedef struct OmapfReport OmapfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *omapf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *omapf_version(void);

/**
 * Loads a map file and a scenario file.
 *
 * # Safety
 * `map_path` and `scen_path` must be NUL-terminated strings and `out` a
 * writable pointer.
 */
enum OmapfStatus omapf_instance_load(const char *map_path,
                                     const char *scen_path,
                                     struct OmapfInstance **out);

/**
 * Builds an instance from map and scenario text held in memory.
 *
 * # Safety
 * `map_text` and `scen_text` must be NUL-terminated strings and `out` a
 * writable pointer.
 */
enum OmapfStatus omapf_instance_from_text(const char *map_text,
                                          const char *scen_text,
                                          struct OmapfInstance **out);

/**
 * # Safety
 * `instance` must come from an `omapf_instance_*` constructor or be null.
 */
size_t omapf_instance_num_agents(const struct OmapfInstance *instance);

/**
 * # Safety
 * `instance` must come from an `omapf_instance_*` constructor or be null,
 * and must not be used afterwards.
 */
void omapf_instance_free(struct OmapfInstance *instance);

/**
 * Runs every replanning iteration of `instance`.
 *
 * `solver` is one of `a1`..`a4`, `heuristic` is `manhattan` or `exact`
 * (null picks `manhattan`), and a non-positive `time_limit` means no limit.
 * A report is written to `out` even when the run times out or hits an
 * unsolvable iteration; the status then says which.
 *
 * # Safety
 * `instance` must be a live handle, `solver` a NUL-terminated string,
 * `heuristic` null or NUL-terminated, and `out` a writable pointer.
 */
enum OmapfStatus omapf_solve(const struct OmapfInstance *instance,
                             const char *solver,
                             const char *heuristic,
                             double time_limit,
                             struct OmapfReport **out);

/**
 * `OMAPF_STATUS_OK`, `TIMEOUT` or `UNSOLVABLE` for the run behind `report`.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
enum OmapfStatus omapf_report_status(const struct OmapfReport *report);

/**
 * Number of completed replanning iterations.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t omapf_report_num_iterations(const struct OmapfReport *report);

/**
 * Replanning time and sum of costs of iteration `index`.
 *
 * # Safety
 * `report` must be a live handle; `time` and `soc` writable pointers.
 */
enum OmapfStatus omapf_report_iteration(const struct OmapfReport *report,
                                        size_t index,
                                        uint32_t *time,
                                        uint64_t *soc);

/**
 * Wall-clock seconds of the run; the limit itself after a timeout.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
double omapf_report_total_time(const struct OmapfReport *report);

/**
 * Low-level expansions summed over the run.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
uint64_t omapf_report_expansions(const struct OmapfReport *report);

/**
 * The full report as JSON; free with [`omapf_string_free`].
 *
 * # Safety
 * `report` must be a live handle or null.
 */
char *omapf_report_to_json(const struct OmapfReport *report);

/**
 * One JSON line per iteration with every agent's plan; free with
 * [`omapf_string_free`].
 *
 * # Safety
 * `report` must be a live handle or null.
 */
char *omapf_report_plan_dump(const struct OmapfReport *report);

/**
 * # Safety
 * `report` must come from [`omapf_solve`] or be null, and must not be used
 * afterwards.
 */
void omapf_report_free(struct OmapfReport *report);

/**
 * # Safety
 * `s` must be a string returned by this library or null.
 */
void omapf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMAPF_H */
