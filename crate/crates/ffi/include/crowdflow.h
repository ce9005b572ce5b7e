#ifndef CROWDFLOW_H
#define CROWDFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_ARGUMENT = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_CONFIG = 3,
  CF_STATUS_INSUFFICIENT_DATA = 4,
  CF_STATUS_SCENARIO = 5,
  CF_STATUS_UNDEFINED_METRIC = 6,
  CF_STATUS_FORMAT = 7,
  CF_STATUS_MISSING_INPUT = 8,
  CF_STATUS_IO = 9,
  CF_STATUS_JSON = 10,
  CF_STATUS_PANIC = 11,
} CfStatus;

/**
 * Pipeline configuration.
 */
typedef struct CfConfig CfConfig;

/**
 * Evaluation report of a completed run.
 */
typedef struct CfReport CfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *cf_last_error(void);

/**
 * A configuration with every parameter at its default.
 */
struct CfConfig *cf_config_default(void);

/**
 * Parse a JSON configuration document; missing keys take their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CfStatus cf_config_from_json(const char *json, struct CfConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void cf_config_free(struct CfConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum CfStatus cf_config_set_seed(struct CfConfig *cfg, uint64_t seed);

/**
 * Select a built-in scenario for the simulate stage.
 *
 * # Safety
 * `cfg` must be a live handle and `name` a NUL-terminated string.
 */
enum CfStatus cf_config_set_preset(struct CfConfig *cfg, const char *name);

/**
 * Enable or disable a stage by name (`simulate`, `frontend`, `flow`,
 * `graph`, `semantics`, `eval`).
 *
 * # Safety
 * `cfg` must be a live handle and `stage` a NUL-terminated string.
 */
enum CfStatus cf_config_set_stage(struct CfConfig *cfg, const char *stage, bool enabled);

/**
 * Run the enabled stages, writing artifacts under `out_dir`.
 *
 * When the run includes evaluation, `*report` receives a new report handle;
 * otherwise it is set to null. On failure the error record is also written
 * to `out_dir/error.json`.
 *
 * # Safety
 * `cfg` must be a live handle, `out_dir` a NUL-terminated string and
 * `report` a valid pointer.
 */
enum CfStatus cf_run_pipeline(const struct CfConfig *cfg,
                              const char *out_dir,
                              struct CfReport **report);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void cf_report_free(struct CfReport *report);

/**
 * Vertex and edge counts of the estimated and the truth graph.
 *
 * # Safety
 * `report` must be a live handle; output pointers must be valid.
 */
enum CfStatus cf_report_counts(const struct CfReport *report,
                               size_t *est_vertices,
                               size_t *est_edges,
                               size_t *truth_vertices,
                               size_t *truth_edges);

/**
 * Mean one-sided chamfer distance, meters.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_report_d_avg(const struct CfReport *report, double *out);

/**
 * Edge orientation MAE in degrees; `UndefinedMetric` without associated edges.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_report_orientation_mae(const struct CfReport *report, double *out);

/**
 * Split-ratio MAE; `UndefinedMetric` when no split is comparable.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_report_split_mae(const struct CfReport *report, double *out);

/**
 * The full report as a JSON string, released with [`cf_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_report_to_json(const struct CfReport *report, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDFLOW_H */
