// Command-line front end. Talks to the simulator only through the C API.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wlc/wlc.h"

namespace {

struct Flags {
    std::string config;
    std::string out;
    bool suppress = false;
    int snapshots = -1;
    double mismatch = 0.0;
    bool has_mismatch = false;
    int jobs = 0;
    std::vector<std::string> overrides;
};

int fail_with(int status) {
    std::fprintf(stderr, "error: %s\n", wlc_last_error());
    return wlc_is_validation_error(status) ? 1 : 2;
}

int run(const std::string& subcommand, const Flags& flags) {
    wlc_scenario* s = nullptr;
    int status = wlc_scenario_load(flags.config.c_str(), &s);
    if (status != WLC_OK) return fail_with(status);

    std::vector<std::pair<std::string, std::string>> sets;
    for (const std::string& o : flags.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: ConfigError: override '%s' is not key=value\n", o.c_str());
            wlc_scenario_free(s);
            return 1;
        }
        sets.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    if (flags.suppress) sets.emplace_back("run.suppress_4wm", "true");
    if (flags.snapshots >= 0) sets.emplace_back("run.snapshots", std::to_string(flags.snapshots));
    if (flags.has_mismatch) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", flags.mismatch);
        sets.emplace_back("cavity.mismatch", buf);
    }
    if (flags.jobs > 0) sets.emplace_back("run.jobs", std::to_string(flags.jobs));
    if (!flags.out.empty()) sets.emplace_back("run.out", flags.out);

    for (const auto& [key, value] : sets) {
        status = wlc_scenario_set(s, key.c_str(), value.c_str());
        if (status != WLC_OK) {
            wlc_scenario_free(s);
            return fail_with(status);
        }
    }

    status = wlc_scenario_run(s, subcommand.c_str(), nullptr);
    for (size_t i = 0; i < wlc_scenario_file_count(s); ++i)
        std::printf("wrote %s\n", wlc_scenario_file(s, i));
    std::fputs(wlc_scenario_summary(s), stdout);
    wlc_scenario_free(s);
    return status == WLC_OK ? 0 : fail_with(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"White-light cavity simulator"};
    app.set_version_flag("--version", std::string(wlc_version()));
    app.require_subcommand(1);

    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"propagate", "cw field profiles and pulse snapshots through the medium"},
        {"susceptibility", "effective probe susceptibility over a detuning sweep"},
        {"group-index", "group index from pulse advancement and from the dispersion fit"},
        {"cavity", "buildup profile of the cavity with the medium"},
        {"scaling", "bandwidth enhancement against the empty-cavity bandwidth"},
        {"calibrate", "coupling calibration for a target resonant group index"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "scenario config file")->required();
        sub->add_option("--out", flags.out, "output directory");
        sub->add_flag("--suppress-4wm", flags.suppress, "clamp the generated field to zero");
        sub->add_option("--snapshots", flags.snapshots, "number of pulse snapshots")
            ->check(CLI::NonNegativeNumber);
        sub->add_option_function<double>(
               "--mismatch",
               [&flags](const double& v) {
                   flags.mismatch = v;
                   flags.has_mismatch = true;
               },
               "fractional cavity length mismatch");
        sub->add_option("--jobs", flags.jobs, "concurrent sweep tasks")->check(CLI::PositiveNumber);
        sub->add_option("--set", flags.overrides, "override section.key=value")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return run(app.get_subcommands().front()->get_name(), flags);
}
