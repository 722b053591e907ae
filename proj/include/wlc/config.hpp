#pragma once

// Scenario configuration: a plain-text file of `key = value` lines grouped
// under [section] headers. '#' starts a comment. Every key has a default;
// unknown keys and malformed values are errors that name the offending line.

#include <string>
#include <utility>
#include <vector>

#include "wlc/cavity.hpp"
#include "wlc/measurement.hpp"

namespace wlc {

struct SweepSettings {
    double delta_min = -2.0;  // gamma
    double delta_max = 2.0;
    int points = 81;
    SweepMethod method = SweepMethod::TimeDomain;
    double fit_window = 0.5;  // gamma
    int fit_points = 21;
};

struct CavitySettings {
    double length = 0.595;  // m
    double finesse = 1000.0;
    bool include_medium_amplitude = true;
    bool lock_resonance = true;
    bool solve_geometry = true;
    SweepMethod sweep_method = SweepMethod::Stationary;
    double mismatch = 0.0;            // fractional change of L
    double profile_half_range = 1.5;  // gamma
    int profile_points = 3001;
    double flatness_window = 2.0;     // half window in units of gamma0
};

struct GroupIndexSettings {
    std::vector<double> detunings{0.0};    // carrier detunings, gamma
    std::vector<double> bandwidths{0.5};   // intensity-spectrum FWHM, gamma
};

struct ScalingSettings {
    std::vector<double> finesses{100.0, 300.0, 1000.0, 3000.0, 10000.0};
};

struct RunSettings {
    bool suppress_4wm = false;
    int snapshots = 6;
    int jobs = 1;
    std::string out = "out";
    double calibration_target = -2.0;  // resonant n_g sought by `calibrate`
};

struct ScenarioConfig {
    MediumSpec medium;
    FieldAmplitudes controls{16.0, 15.5, 0.0, 0.0};
    ProbeWaveform probe;
    Grid grid;
    PrepareOptions prepare;
    PropagateOptions propagate;
    SweepSettings sweep;
    CavitySettings cavity;
    GroupIndexSettings group_index;
    ScalingSettings scaling;
    RunSettings run;

    // Resolved `section.key = value` pairs in a fixed order, for output headers.
    std::vector<std::pair<std::string, std::string>> echo;
};

struct Override {
    std::string key;  // section.key
    std::string value;
};

// `source` names the text in error messages. Throws ConfigError for syntax,
// unknown keys and bad values; InvalidArgument/CflViolation from validation.
ScenarioConfig parse_config(const std::string& text, const std::string& source,
                            const std::vector<Override>& overrides = {});
ScenarioConfig load_config(const std::string& path, const std::vector<Override>& overrides = {});

// Splits "section.key=value". Throws ConfigError.
Override parse_override(const std::string& assignment);

// All accepted keys in echo order.
std::vector<std::string> config_keys();

}  // namespace wlc
