#ifndef LFC_H
#define LFC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LfcStatus {
  LFC_STATUS_OK = 0,
  LFC_STATUS_NULL_POINTER = 1,
  LFC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Bad scenario contents or config file syntax.
   */
  LFC_STATUS_CONFIG = 3,
  LFC_STATUS_DIVERGED = 4,
  LFC_STATUS_IO = 5,
  LFC_STATUS_OUT_OF_RANGE = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  LFC_STATUS_INTERNAL = 7,
} LfcStatus;

/**
 * Opaque scenario handle.
 */
typedef struct LfcScenario LfcScenario;

/**
 * Opaque simulation result handle.
 */
typedef struct LfcTrace LfcTrace;

typedef struct LfcIndices {
  double itae;
  double itse;
  double ise;
  double iae;
} LfcIndices;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *lfc_last_error_message(void);

/**
 * Built-in scenario by name ("bench39").
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LfcStatus lfc_scenario_builtin(const char *name, struct LfcScenario **out);

/**
 * Scenario from a config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LfcStatus lfc_scenario_from_file(const char *path, struct LfcScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void lfc_scenario_free(struct LfcScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum LfcStatus lfc_scenario_set_dt(struct LfcScenario *scenario, double dt);

/**
 * Shortens or extends the run; scheduled steps are clipped to the new horizon.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum LfcStatus lfc_scenario_set_horizon(struct LfcScenario *scenario, double horizon);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum LfcStatus lfc_scenario_set_seed(struct LfcScenario *scenario, uint64_t seed);

/**
 * Noise standard deviation in pu; 0 disables it.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum LfcStatus lfc_scenario_set_noise(struct LfcScenario *scenario, double std_dev);

/**
 * "gitsmc", "pi" or "none".
 *
 * # Safety
 * `scenario` must be a live handle and `name` a NUL-terminated string.
 */
enum LfcStatus lfc_scenario_set_controller(struct LfcScenario *scenario, const char *name);

/**
 * Number of areas, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
uintptr_t lfc_scenario_area_count(const struct LfcScenario *scenario);

/**
 * Simulates the scenario. On divergence returns `Diverged` and leaves `*out` untouched.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum LfcStatus lfc_run(const struct LfcScenario *scenario, struct LfcTrace **out);

/**
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void lfc_trace_free(struct LfcTrace *trace);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
uintptr_t lfc_trace_len(const struct LfcTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or null.
 */
uintptr_t lfc_trace_areas(const struct LfcTrace *trace);

/**
 * One state value: `area` is 0-based, `index` 0..7 in the order
 * dP_tie, df, dP_m, dE, dP_g, dP_pv, dP_wt.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum LfcStatus lfc_trace_state(const struct LfcTrace *trace,
                               uintptr_t sample,
                               uintptr_t area,
                               uintptr_t index,
                               double *out);

/**
 * Time of one sample.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum LfcStatus lfc_trace_time(const struct LfcTrace *trace, uintptr_t sample, double *out);

/**
 * Copies one state series into `buf`, which must hold `lfc_trace_len` values.
 *
 * # Safety
 * `trace` must be a live handle and `buf` valid for `len` writes.
 */
enum LfcStatus lfc_trace_copy_series(const struct LfcTrace *trace,
                                     uintptr_t area,
                                     uintptr_t index,
                                     double *buf,
                                     uintptr_t len);

/**
 * ITAE, ITSE, ISE and IAE of the trace.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum LfcStatus lfc_trace_indices(const struct LfcTrace *trace, struct LfcIndices *out);

/**
 * Writes the trace in the same CSV layout as the command-line tool.
 *
 * # Safety
 * `trace` must be a live handle and `path` a NUL-terminated string.
 */
enum LfcStatus lfc_trace_write_csv(const struct LfcTrace *trace, const char *path);

/**
 * Time for ẋ = −λ·sgn(x)|x|^α to bring |x| from `x0` down to `eps`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LfcStatus lfc_finite_time_estimate(double x0,
                                        double eps,
                                        double lambda,
                                        double alpha,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LFC_H */
