#ifndef ALIGNLAB_H
#define ALIGNLAB_H

/* Generated by cbindgen from the Rust sources. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Renders the per-turn table form of a report.
 */
#define ALIGNLAB_RENDER_TABLE 0

/**
 * Renders the machine-readable CSV form of a report.
 */
#define ALIGNLAB_RENDER_CSV 1

/**
 * Renders the tab-separated plot data form of a report.
 */
#define ALIGNLAB_RENDER_PLOTDATA 2

/**
 * Result code returned by every fallible function in this interface.
 */
enum AlignlabStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  /**
   * The call succeeded and all output parameters were written.
   */
  ALIGNLAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ALIGNLAB_STATUS_NULL_POINTER = 1,
  /**
   * The inputs were structurally invalid (empty, mismatched lengths,
   * out-of-range ratings, positive log probabilities, and so on).
   */
  ALIGNLAB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The render format code was not one of the documented values.
   */
  ALIGNLAB_STATUS_INVALID_FORMAT = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum AlignlabStatus AlignlabStatus;
#else
typedef int32_t AlignlabStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque evaluation report produced by `alignlab_report_new`.
 */
typedef struct AlignlabReport AlignlabReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fits the least-squares line through `(k, values[k-1])` and writes the
 * slope, intercept, and coefficient of determination.
 *
 * # Safety
 * `values` must point to `len` readable doubles; the three output pointers
 * must be writable.
 */
AlignlabStatus alignlab_fit_ir(const double *values,
                               size_t len,
                               double *slope_out,
                               double *intercept_out,
                               double *r_squared_out);

/**
 * Min-max normalizes a per-turn series into `[0, 1]` using its global
 * extrema, writing `len` doubles to `out`. A flat series normalizes to all
 * zeros.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to `len` writable
 * doubles; the ranges must not overlap.
 */
AlignlabStatus alignlab_normalize_al(const double *values, size_t len, double *out);

/**
 * Computes Cohen's kappa between two aligned vectors of 1-5 ratings.
 *
 * # Safety
 * `a` and `b` must each point to `len` readable 64-bit integers; `out` must
 * be writable.
 */
AlignlabStatus alignlab_cohen_kappa(const int64_t *a, const int64_t *b, size_t len, double *out);

/**
 * Computes the cosine similarity of two equal-length vectors.
 *
 * # Safety
 * `a` and `b` must each point to `len` readable doubles; `out` must be
 * writable.
 */
AlignlabStatus alignlab_cosine(const double *a, const double *b, size_t len, double *out);

/**
 * Computes the supervised fine-tuning loss, the negated sum of the
 * per-token log probabilities of the target. All inputs must be `<= 0`.
 *
 * # Safety
 * `target_logprobs` must point to `len` readable doubles; `out` must be
 * writable.
 */
AlignlabStatus alignlab_sft_loss(const double *target_logprobs, size_t len, double *out);

/**
 * Computes the preference loss over `len` paired turns. Each array holds
 * one summed log probability per turn; `beta` must be positive.
 *
 * # Safety
 * The four sequence pointers must each point to `len` readable doubles;
 * `out` must be writable.
 */
AlignlabStatus alignlab_dpo_loss(const double *policy_chosen,
                                 const double *reference_chosen,
                                 const double *policy_rejected,
                                 const double *reference_rejected,
                                 size_t len,
                                 double beta,
                                 double *out);

/**
 * Builds an evaluation report from a row-major `case_count x turns` matrix
 * of 1-5 ratings and stores a handle in `out`. Release the handle with
 * `alignlab_report_free`.
 *
 * # Safety
 * `scores` must point to `case_count * turns` readable 64-bit integers;
 * `out` must be writable.
 */
AlignlabStatus alignlab_report_new(const int64_t *scores,
                                   size_t case_count,
                                   size_t turns,
                                   struct AlignlabReport **out);

/**
 * Returns the number of turns in the report, or 0 for a null handle.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new` or null.
 */
size_t alignlab_report_turns(const struct AlignlabReport *report);

/**
 * Writes the mean alignment score at the zero-based turn `index`.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new`; `out` must be
 * writable.
 */
AlignlabStatus alignlab_report_al(const struct AlignlabReport *report, size_t index, double *out);

/**
 * Writes the mean alignment score over all turns.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new`; `out` must be
 * writable.
 */
AlignlabStatus alignlab_report_average(const struct AlignlabReport *report, double *out);

/**
 * Writes the raw-scale regression fit of the report.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new`; the three output
 * pointers must be writable.
 */
AlignlabStatus alignlab_report_ir(const struct AlignlabReport *report,
                                  double *slope_out,
                                  double *intercept_out,
                                  double *r_squared_out);

/**
 * Writes the min-max normalized regression fit of the report.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new`; the three output
 * pointers must be writable.
 */
AlignlabStatus alignlab_report_n_ir(const struct AlignlabReport *report,
                                    double *slope_out,
                                    double *intercept_out,
                                    double *r_squared_out);

/**
 * Renders the report in the given format (`ALIGNLAB_RENDER_TABLE`,
 * `ALIGNLAB_RENDER_CSV`, or `ALIGNLAB_RENDER_PLOTDATA`) and stores a
 * NUL-terminated string in `out`. Release it with `alignlab_string_free`.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new`; `out` must be
 * writable.
 */
AlignlabStatus alignlab_report_render(const struct AlignlabReport *report,
                                      int32_t format,
                                      char **out);

/**
 * Releases a report handle. Passing null is a no-op.
 *
 * # Safety
 * `report` must be a handle from `alignlab_report_new` that has not already
 * been freed, or null.
 */
void alignlab_report_free(struct AlignlabReport *report);

/**
 * Releases a string returned by `alignlab_report_render`. Passing null is a
 * no-op.
 *
 * # Safety
 * `string` must be a pointer from `alignlab_report_render` that has not
 * already been freed, or null.
 */
void alignlab_string_free(char *string);

/**
 * Returns a static name for a status code, for log messages. Unknown codes
 * map to "unknown status".
 */
const char *alignlab_status_name(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALIGNLAB_H */
