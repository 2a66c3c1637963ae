#ifndef BRITTLE_BAYES_H
#define BRITTLE_BAYES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BbStatus {
  BB_STATUS_OK = 0,
  BB_STATUS_NULL_POINTER = 1,
  BB_STATUS_INVALID_UTF8 = 2,
  BB_STATUS_UNKNOWN_SCENARIO = 3,
  BB_STATUS_INVALID_ARGUMENT = 4,
  BB_STATUS_COMPUTATION_FAILED = 5,
  BB_STATUS_NOT_FOUND = 6,
  BB_STATUS_PANIC = 7,
} BbStatus;

/**
 * Opaque scenario report.
 */
typedef struct BbReport BbReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *bb_last_error_message(void);

/**
 * Runs a scenario. `keys`/`values` hold `n_overrides` parameter overrides
 * (both may be null when `n_overrides` is 0). On success `*out` owns a report.
 *
 * # Safety
 * `name` and each key must be NUL-terminated strings; `keys` and `values`
 * must point to `n_overrides` elements; `out` must be writable.
 */
enum BbStatus bb_run_scenario(const char *name,
                              const char *const *keys,
                              const double *values,
                              size_t n_overrides,
                              uint64_t seed,
                              struct BbReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`bb_run_scenario`] not yet freed.
 */
void bb_report_free(struct BbReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum BbStatus bb_report_passed(const struct BbReport *report, bool *out);

/**
 * Number of metrics in the report, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t bb_report_metric_count(const struct BbReport *report);

/**
 * Value and pass flag of the metric called `label`.
 *
 * # Safety
 * `report` must be a live handle, `label` a NUL-terminated string, and
 * `value`/`pass` writable (`pass` may be null).
 */
enum BbStatus bb_report_metric(const struct BbReport *report,
                               const char *label,
                               double *value,
                               bool *pass);

/**
 * Canonical JSON of the report; release `*out` with [`bb_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum BbStatus bb_report_to_json(const struct BbReport *report, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void bb_string_free(char *s);

/**
 * Posterior probability that the one unfair coin was drawn.
 */
double bb_coin_posterior(uint64_t n_fair, double p_heads_fair, uint32_t n_flips);

/**
 * Lower bound on the worst posterior value for the k-moment class at radius `delta`.
 */
double bb_moment_class_lower_bound(uint32_t k, double delta);

/**
 * Small-radius limit of the upper posterior bound over the likelihood band.
 */
double bb_likelihood_band_limit(double alpha, double a, double m);

double bb_per_point_band_limit(double gamma, uint32_t n);

/**
 * Total variation between two discrete measures given as atom arrays.
 *
 * # Safety
 * Each array must hold the stated number of elements; `out` must be writable.
 */
enum BbStatus bb_tv_distance(const double *xa,
                             const double *wa,
                             size_t na,
                             const double *xb,
                             const double *wb,
                             size_t nb,
                             double *out);

/**
 * Prokhorov distance between two discrete measures, to within `tol`.
 *
 * # Safety
 * As for [`bb_tv_distance`].
 */
enum BbStatus bb_prokhorov_distance(const double *xa,
                                    const double *wa,
                                    size_t na,
                                    const double *xb,
                                    const double *wb,
                                    size_t nb,
                                    double tol,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRITTLE_BAYES_H */
