/* C interface to the frailcomp library. All strings returned through char**
 * out-parameters are heap allocated and must be released with
 * fc_string_free. Functions return an fc_status code; on failure
 * fc_last_error() describes the problem (per thread). */
#ifndef FRAILCOMP_H
#define FRAILCOMP_H

#include <stddef.h>

#if defined(FRAILCOMP_BUILDING_LIBRARY)
#define FC_API __attribute__((visibility("default")))
#else
#define FC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_INTERNAL = 1,
  FC_ERR_CONFIG = 2,
  FC_ERR_DATA = 3,
  FC_ERR_NONCONVERGENCE = 4,
  FC_ERR_NUMERIC = 5,
  FC_ERR_ARGUMENT = 6
} fc_status;

typedef struct fc_dataset fc_dataset;
typedef struct fc_fit fc_fit;

FC_API const char* fc_version(void);
FC_API const char* fc_last_error(void);
FC_API void fc_string_free(char* s);

/* "# frailcomp <version> <config hash>" for a JSON config text. */
FC_API int fc_provenance(const char* config_json, char** out);

/* options_json: {"n_events": 2, "late_event_as_unaffected": false} or NULL */
FC_API int fc_dataset_load(const char* path, const char* options_json, fc_dataset** out);
FC_API int fc_dataset_write(const fc_dataset* ds, const char* path, const char* header_comment);
FC_API int fc_dataset_summary_csv(const fc_dataset* ds, char** out);
FC_API size_t fc_dataset_n_families(const fc_dataset* ds);
FC_API size_t fc_dataset_n_individuals(const fc_dataset* ds);
FC_API void fc_dataset_free(fc_dataset* ds);

FC_API int fc_simulate(const char* design_json, fc_dataset** out);

/* model_json may be NULL for the default model of the data. Returns
 * FC_ERR_NONCONVERGENCE with *out still set when the optimizer did not
 * converge. */
FC_API int fc_fit_run(const fc_dataset* ds, const char* model_json, const char* options_json, fc_fit** out);
FC_API int fc_fit_from_json(const char* text, fc_fit** out);
FC_API int fc_fit_to_json(const fc_fit* fit, char** out);
FC_API int fc_fit_table_csv(const fc_fit* fit, char** out);
FC_API int fc_fit_converged(const fc_fit* fit);
FC_API double fc_fit_loglik(const fc_fit* fit);
FC_API double fc_fit_aic(const fc_fit* fit);
FC_API void fc_fit_free(fc_fit* fit);

/* request: {"ages": [...], "profiles": [{"genotype": 1, "tvc_ages": [35]}],
 *           "events": [1, 2], "ci_scale": "plain" | "cloglog"} */
FC_API int fc_penetrance_csv(const fc_fit* fit, const char* request_json, char** out);

/* request: {"event": 1, "term": 1, "years_since": [...]} */
FC_API int fc_hazard_ratio_csv(const fc_fit* fit, const char* request_json, char** out);

/* options: {"posterior": "individual" | "family_summed"} or NULL */
FC_API int fc_residuals_csv(const fc_fit* fit, const fc_dataset* ds, const char* options_json,
                            char** individual_out, char** family_out);

/* Fits PE, ED and CO variants; *best_out receives "PE", "ED" or "CO". */
FC_API int fc_select(const fc_dataset* ds, const char* model_json, const char* options_json, char** table_out,
                     char** best_out);
FC_API int fc_compare_csv(const fc_fit* const* fits, const char* const* labels, size_t n, char** out);
FC_API int fc_lrt(const fc_fit* full, const fc_fit* null_fit, int df, double* statistic, double* p_value);

/* options: {"fit": {...}, "vary_seed": true, "penetrance_age": 70, "tvc_age": 35} */
FC_API int fc_replicate(const char* design_json, size_t replicates, const char* options_json, char** out);

#ifdef __cplusplus
}
#endif

#endif
