/* Exercises the public C interface; links only against libwlc. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "wlc/wlc.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                \
        }                                                              \
    } while (0)

static void formulas(void) {
    double g0 = 0.0, g1 = 0.0, ng = 0.0, ratio = 0.0, re = 0.0, im = 0.0;
    const double pi = 3.14159265358979323846, c = 299792458.0;
    EXPECT(wlc_empty_bandwidth(0.595, 1000.0, &g0) == WLC_OK);
    EXPECT(fabs(g0 - pi * c / (0.595 * 1000.0)) < 1e-6 * g0);

    EXPECT(wlc_wlc_bandwidth(0.595, 1000.0, 2.415e15, 0.2975, 5e-32, &g1) == WLC_OK);
    EXPECT(g1 > g0);
    EXPECT(wlc_wlc_bandwidth(0.595, 1000.0, 2.415e15, 0.2975, -1.0, &g1) == WLC_NONPOSITIVE_CUBIC_TERM);
    EXPECT(strstr(wlc_last_error(), "NonpositiveCubicTerm") != NULL);
    EXPECT(!wlc_is_validation_error(WLC_NONPOSITIVE_CUBIC_TERM));

    EXPECT(wlc_group_index(2e-9, 0.3, &ng) == WLC_OK);
    EXPECT(fabs(ng + 1.9986163866666667) < 1e-12);
    EXPECT(wlc_wlc_condition(-2.0, &ratio) == WLC_OK && ratio == 2.0);
    EXPECT(wlc_wlc_condition(-0.5, &ratio) == WLC_INSUFFICIENT_GROUP_INDEX);

    EXPECT(wlc_extract_susceptibility(0.0, 0.0, 1.0, 0.0, 1.0, 1.0, &re, &im) == WLC_ZERO_ENTRY_AMPLITUDE);
    EXPECT(wlc_extract_susceptibility(1.0, 0.0, cos(0.1), sin(0.1), 1.0, 2.0, &re, &im) == WLC_OK);
    EXPECT(fabs(re - 0.1) < 1e-14 && fabs(im) < 1e-14);
    EXPECT(wlc_empty_bandwidth(0.595, 1000.0, NULL) == WLC_INVALID_ARGUMENT);
    EXPECT(wlc_is_validation_error(WLC_INVALID_ARGUMENT));
}

static void scenarios(const char* out_dir) {
    wlc_scenario* s = NULL;
    char buf[64];
    EXPECT(wlc_scenario_parse("[medium]\nlenght = 1\n", &s) == WLC_CONFIG_ERROR);
    EXPECT(s == NULL);
    EXPECT(strstr(wlc_last_error(), "<text>:2") != NULL);
    EXPECT(wlc_scenario_load("/nonexistent/x.cfg", &s) == WLC_IO_ERROR);

    EXPECT(wlc_scenario_load(NULL, &s) == WLC_OK);
    EXPECT(wlc_scenario_get(s, "medium.length", buf, sizeof buf) == WLC_OK);
    EXPECT(strcmp(buf, "0.29999999999999999") == 0);
    EXPECT(wlc_scenario_set(s, "grid.nz", "32") == WLC_OK);
    EXPECT(wlc_scenario_set(s, "grid.nz", "zero") == WLC_CONFIG_ERROR);
    EXPECT(wlc_scenario_get(s, "grid.nz", buf, sizeof buf) == WLC_OK);
    EXPECT(strcmp(buf, "32") == 0);
    EXPECT(wlc_scenario_get(s, "grid.nz", buf, 2) == WLC_INVALID_ARGUMENT);
    EXPECT(wlc_scenario_get(s, "grid.bogus", buf, sizeof buf) == WLC_CONFIG_ERROR);

    EXPECT(wlc_scenario_set(s, "sweep.method", "stationary") == WLC_OK);
    EXPECT(wlc_scenario_set(s, "sweep.points", "11") == WLC_OK);
    EXPECT(wlc_scenario_set(s, "sweep.delta_min", "-0.5") == WLC_OK);
    EXPECT(wlc_scenario_set(s, "sweep.delta_max", "0.5") == WLC_OK);
    EXPECT(wlc_scenario_set(s, "sweep.fit_points", "11") == WLC_OK);
    EXPECT(wlc_scenario_run(s, "susceptibility", out_dir) == WLC_OK);
    EXPECT(wlc_scenario_file_count(s) == 1);
    EXPECT(wlc_scenario_file(s, 0) != NULL && strstr(wlc_scenario_file(s, 0), "susceptibility.csv"));
    EXPECT(wlc_scenario_file(s, 1) == NULL);
    EXPECT(strstr(wlc_scenario_summary(s), "group_index") != NULL);
    EXPECT(wlc_scenario_run(s, "nonsense", out_dir) == WLC_INVALID_ARGUMENT);
    wlc_scenario_free(s);
    wlc_scenario_free(NULL);
}

int main(int argc, char** argv) {
    EXPECT(strcmp(wlc_version(), "1.0.0") == 0);
    EXPECT(strcmp(wlc_status_name(WLC_OK), "Ok") == 0);
    EXPECT(strcmp(wlc_status_name(WLC_NO_PEAK), "NoPeak") == 0);
    formulas();
    scenarios(argc > 1 ? argv[1] : "capi_out");
    if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
    return failures ? 1 : 0;
}
