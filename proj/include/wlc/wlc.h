#ifndef WLC_WLC_H
#define WLC_WLC_H

/* C interface to the white-light-cavity simulator. Every call returns a
 * wlc_status; on failure wlc_last_error() holds the message for the calling
 * thread until its next call into the library. */

#include <stddef.h>

#if defined(_WIN32)
#define WLC_API __declspec(dllexport)
#else
#define WLC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wlc_status {
    WLC_OK = 0,
    WLC_INVALID_ARGUMENT = 1,
    WLC_CONFIG_ERROR = 2,
    WLC_STEP_UNSTABLE = 10,
    WLC_DEGENERATE_STEADY_STATE = 11,
    WLC_SINGULAR_LINEAR_SYSTEM = 12,
    WLC_CFL_VIOLATION = 13,
    WLC_NO_CONVERGENCE = 14,
    WLC_NO_PEAK = 15,
    WLC_ZERO_ENTRY_AMPLITUDE = 16,
    WLC_ILL_CONDITIONED_FIT = 17,
    WLC_OUT_OF_RANGE = 18,
    WLC_ABOVE_LASING_THRESHOLD = 19,
    WLC_NO_HALF_CROSSING = 20,
    WLC_INSUFFICIENT_GROUP_INDEX = 21,
    WLC_NONPOSITIVE_CUBIC_TERM = 22,
    WLC_IO_ERROR = 30,
    WLC_INTERNAL_ERROR = 99
} wlc_status;

typedef struct wlc_scenario wlc_scenario;

WLC_API const char* wlc_version(void);
WLC_API const char* wlc_status_name(int status);
/* Nonzero for bad input (arguments, config, files) as opposed to numerical failure. */
WLC_API int wlc_is_validation_error(int status);
WLC_API const char* wlc_last_error(void);

/* A scenario is a config file plus overrides. `path` may be NULL to start
 * from the built-in defaults. */
WLC_API int wlc_scenario_load(const char* path, wlc_scenario** out);
WLC_API int wlc_scenario_parse(const char* text, wlc_scenario** out);
/* Override "section.key" with a value; the scenario is re-validated. */
WLC_API int wlc_scenario_set(wlc_scenario* s, const char* key, const char* value);
/* Copies the resolved value of "section.key" into buf (NUL-terminated). */
WLC_API int wlc_scenario_get(const wlc_scenario* s, const char* key, char* buf, size_t len);
/* Runs a subcommand. out_dir may be NULL (use run.out). Sweep runs with some
 * failed points still write their files and return the first failure code. */
WLC_API int wlc_scenario_run(wlc_scenario* s, const char* subcommand, const char* out_dir);
/* Summary text ("key: value" lines) and written files of the last run. */
WLC_API const char* wlc_scenario_summary(const wlc_scenario* s);
WLC_API size_t wlc_scenario_file_count(const wlc_scenario* s);
WLC_API const char* wlc_scenario_file(const wlc_scenario* s, size_t i);
WLC_API void wlc_scenario_free(wlc_scenario* s);

/* Direct formulas. Rates in rad/s, lengths in m, times in s. */
WLC_API int wlc_empty_bandwidth(double cavity_length, double finesse, double* gamma0);
WLC_API int wlc_wlc_bandwidth(double cavity_length, double finesse, double omega0,
                              double medium_length, double n3, double* gamma1);
WLC_API int wlc_group_index(double advancement, double medium_length, double* group_index);
WLC_API int wlc_wlc_condition(double group_index, double* length_ratio);
WLC_API int wlc_extract_susceptibility(double entry_re, double entry_im, double exit_re,
                                       double exit_im, double wave_number, double medium_length,
                                       double* chi_re, double* chi_im);

#ifdef __cplusplus
}
#endif

#endif
