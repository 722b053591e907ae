#pragma once

// Scenario runner behind the command-line tool. Each subcommand reads a
// resolved ScenarioConfig and writes CSV files into an output directory.

#include <optional>
#include <string>
#include <vector>

#include "wlc/config.hpp"

namespace wlc {

inline constexpr const char* kVersion = "1.0.0";

// propagate, susceptibility, group-index, cavity, scaling, calibrate
const std::vector<std::string>& scenario_names();

struct ScenarioOutcome {
    std::vector<std::string> files;  // written, in order
    std::string summary;             // human-readable key: value lines
    // Set when some sweep points failed; their rows are still written.
    std::optional<ErrorCode> partial_failure;
    std::string partial_message;
};

// Throws Error on failure of the whole run. `out_dir` overrides run.out when
// non-empty; the directory is created if missing.
ScenarioOutcome run_scenario(const std::string& name, const ScenarioConfig& config,
                             const std::string& out_dir = "");

// Values are written with 17 significant digits in scientific notation.
std::string format_value(double v);

}  // namespace wlc
