#include "wlc/wlc.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "wlc/scenario.hpp"

struct wlc_scenario {
    std::string text;
    std::string source;
    std::vector<wlc::Override> overrides;
    wlc::ScenarioConfig config;
    wlc::ScenarioOutcome last;
};

namespace {

thread_local std::string last_error;

int report(int status, const std::string& message) {
    last_error = message;
    return status;
}

// Runs `body`, mapping exceptions onto status codes.
template <typename Body>
int guarded(Body&& body) {
    last_error.clear();
    try {
        return body();
    } catch (const wlc::Error& e) {
        return report(static_cast<int>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return report(WLC_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return report(WLC_INTERNAL_ERROR, e.what());
    }
}

int make_scenario(std::string text, std::string source, wlc_scenario** out) {
    if (!out) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output handle");
    *out = nullptr;
    auto s = std::make_unique<wlc_scenario>();
    s->config = wlc::parse_config(text, source);
    s->text = std::move(text);
    s->source = std::move(source);
    *out = s.release();
    return WLC_OK;
}

}  // namespace

extern "C" {

const char* wlc_version(void) { return wlc::kVersion; }

const char* wlc_status_name(int status) {
    if (status == WLC_OK) return "Ok";
    if (status == WLC_INTERNAL_ERROR) return "InternalError";
    return wlc::error_name(static_cast<wlc::ErrorCode>(status)).data();
}

int wlc_is_validation_error(int status) {
    return status != WLC_OK && status != WLC_INTERNAL_ERROR &&
           wlc::is_validation_error(static_cast<wlc::ErrorCode>(status));
}

const char* wlc_last_error(void) { return last_error.c_str(); }

int wlc_scenario_load(const char* path, wlc_scenario** out) {
    return guarded([&] {
        if (!path) return make_scenario("", "<defaults>", out);
        std::ifstream f(path);
        if (!f) return report(WLC_IO_ERROR, std::string("IoError: cannot read config '") + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return make_scenario(ss.str(), path, out);
    });
}

int wlc_scenario_parse(const char* text, wlc_scenario** out) {
    return guarded([&] {
        if (!text) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null config text");
        return make_scenario(text, "<text>", out);
    });
}

int wlc_scenario_set(wlc_scenario* s, const char* key, const char* value) {
    return guarded([&] {
        if (!s || !key || !value) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null argument");
        std::vector<wlc::Override> trial = s->overrides;
        trial.push_back({key, value});
        s->config = wlc::parse_config(s->text, s->source, trial);
        s->overrides = std::move(trial);
        return static_cast<int>(WLC_OK);
    });
}

int wlc_scenario_get(const wlc_scenario* s, const char* key, char* buf, size_t len) {
    return guarded([&] {
        if (!s || !key || !buf || len == 0)
            return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null argument");
        for (const auto& [k, v] : s->config.echo) {
            if (k != key) continue;
            if (v.size() + 1 > len) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: buffer too small");
            std::memcpy(buf, v.c_str(), v.size() + 1);
            return static_cast<int>(WLC_OK);
        }
        return report(WLC_CONFIG_ERROR, std::string("ConfigError: unknown key '") + key + "'");
    });
}

int wlc_scenario_run(wlc_scenario* s, const char* subcommand, const char* out_dir) {
    return guarded([&] {
        if (!s || !subcommand) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null argument");
        s->last = {};
        s->last = wlc::run_scenario(subcommand, s->config, out_dir ? out_dir : "");
        if (s->last.partial_failure)
            return report(static_cast<int>(*s->last.partial_failure),
                          std::string(wlc::error_name(*s->last.partial_failure)) + ": " +
                              s->last.partial_message);
        return static_cast<int>(WLC_OK);
    });
}

const char* wlc_scenario_summary(const wlc_scenario* s) { return s ? s->last.summary.c_str() : ""; }

size_t wlc_scenario_file_count(const wlc_scenario* s) { return s ? s->last.files.size() : 0; }

const char* wlc_scenario_file(const wlc_scenario* s, size_t i) {
    if (!s || i >= s->last.files.size()) return nullptr;
    return s->last.files[i].c_str();
}

void wlc_scenario_free(wlc_scenario* s) { delete s; }

int wlc_empty_bandwidth(double cavity_length, double finesse, double* gamma0) {
    return guarded([&] {
        if (!gamma0) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output");
        // omega0 does not enter the empty-cavity width
        *gamma0 = wlc::empty_bandwidth(wlc::CavitySpec::from_finesse(cavity_length, finesse, 1.0));
        return static_cast<int>(WLC_OK);
    });
}

int wlc_wlc_bandwidth(double cavity_length, double finesse, double omega0, double medium_length,
                      double n3, double* gamma1) {
    return guarded([&] {
        if (!gamma1) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output");
        const auto cavity = wlc::CavitySpec::from_finesse(cavity_length, finesse, omega0);
        *gamma1 = wlc::wlc_bandwidth_analytic(cavity, medium_length, n3);
        return static_cast<int>(WLC_OK);
    });
}

int wlc_group_index(double advancement, double medium_length, double* group_index) {
    return guarded([&] {
        if (!group_index) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output");
        *group_index = wlc::group_index(advancement, medium_length);
        return static_cast<int>(WLC_OK);
    });
}

int wlc_wlc_condition(double group_index, double* length_ratio) {
    return guarded([&] {
        if (!length_ratio) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output");
        *length_ratio = wlc::wlc_condition(group_index);
        return static_cast<int>(WLC_OK);
    });
}

int wlc_extract_susceptibility(double entry_re, double entry_im, double exit_re, double exit_im,
                               double wave_number, double medium_length, double* chi_re,
                               double* chi_im) {
    return guarded([&] {
        if (!chi_re || !chi_im) return report(WLC_INVALID_ARGUMENT, "InvalidArgument: null output");
        const auto x = wlc::extract_susceptibility({entry_re, entry_im}, {exit_re, exit_im},
                                                   wave_number, medium_length);
        *chi_re = x.chi_re;
        *chi_im = x.chi_im;
        return static_cast<int>(WLC_OK);
    });
}

}  // extern "C"
