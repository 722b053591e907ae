#include "wlc/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace wlc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) throw std::invalid_argument("expected a number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        throw std::invalid_argument("'" + t + "' is not a finite number");
    return v;
}

int to_int(const std::string& s) {
    const std::string t = trim(s);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || v < -(1L << 30) ||
        v > (1L << 30))
        throw std::invalid_argument("'" + t + "' is not an integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw std::invalid_argument("'" + t + "' is not a boolean");
}

std::vector<double> to_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
    return out;
}

std::string from_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
}

SweepMethod to_method(const std::string& s) {
    const std::string t = trim(s);
    if (t == "time-domain") return SweepMethod::TimeDomain;
    if (t == "stationary") return SweepMethod::Stationary;
    throw std::invalid_argument("method must be time-domain or stationary");
}

std::string from_method(SweepMethod m) {
    return m == SweepMethod::TimeDomain ? "time-domain" : "stationary";
}

struct Entry {
    std::string key;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

#define WLC_NUM(name, field)                                                              \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_double(v); },    \
            [](const ScenarioConfig& c) { return format_number(c.field); }                \
    }
#define WLC_INT(name, field)                                                              \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_int(v); },       \
            [](const ScenarioConfig& c) { return std::to_string(c.field); }               \
    }
#define WLC_BOOL(name, field)                                                             \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_bool(v); },      \
            [](const ScenarioConfig& c) { return std::string(c.field ? "true" : "false"); } \
    }
#define WLC_LIST(name, field)                                                             \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_list(v); },      \
            [](const ScenarioConfig& c) { return from_list(c.field); }                    \
    }
#define WLC_METHOD(name, field)                                                           \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_method(v); },    \
            [](const ScenarioConfig& c) { return from_method(c.field); }                  \
    }

// Complex Rabi frequencies are configured by magnitude (real amplitudes).
#define WLC_RABI(name, field)                                                             \
    Entry {                                                                               \
        name, [](ScenarioConfig& c, const std::string& v) { c.field = to_double(v); },    \
            [](const ScenarioConfig& c) { return format_number(c.field.real()); }         \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        WLC_NUM("medium.length", medium.length),
        WLC_NUM("medium.density", medium.density),
        WLC_NUM("medium.wavelength", medium.wavelength),
        WLC_NUM("medium.gamma", medium.gamma),
        WLC_NUM("medium.coupling_calibration", medium.coupling_calibration),
        WLC_NUM("medium.gamma31", medium.scheme.gamma31),
        WLC_NUM("medium.gamma32", medium.scheme.gamma32),
        WLC_NUM("medium.gamma41", medium.scheme.gamma41),
        WLC_NUM("medium.gamma42", medium.scheme.gamma42),
        WLC_RABI("controls.omega31", controls.omega31),
        WLC_RABI("controls.omega42", controls.omega42),
        WLC_NUM("controls.delta31", medium.scheme.delta31),
        WLC_NUM("controls.delta42", medium.scheme.delta42),
        WLC_NUM("probe.amplitude", probe.amplitude),
        WLC_NUM("probe.detuning", probe.detuning),
        WLC_NUM("probe.bandwidth", probe.bandwidth),
        WLC_NUM("probe.center", probe.center),
        WLC_NUM("probe.ramp", probe.ramp),
        WLC_INT("grid.nz", grid.nz),
        WLC_NUM("grid.dt", grid.dt),
        WLC_NUM("grid.courant", grid.courant),
        WLC_NUM("grid.duration", grid.duration),
        Entry{"grid.frame",
              [](ScenarioConfig& c, const std::string& v) {
                  const std::string t = trim(v);
                  if (t == "retarded")
                      c.grid.frame = Frame::Retarded;
                  else if (t == "lab")
                      c.grid.frame = Frame::Lab;
                  else
                      throw std::invalid_argument("frame must be retarded or lab");
              },
              [](const ScenarioConfig& c) {
                  return std::string(c.grid.frame == Frame::Lab ? "lab" : "retarded");
              }},
        WLC_NUM("prepare.ground_weight", prepare.initial_ground_weight),
        WLC_NUM("prepare.ramp", prepare.ramp),
        WLC_NUM("prepare.check_window", prepare.check_window),
        WLC_NUM("prepare.tolerance", prepare.tolerance),
        WLC_NUM("prepare.max_duration", prepare.max_duration),
        WLC_NUM("propagate.check_window", propagate.check_window),
        WLC_NUM("propagate.steady_tolerance", propagate.steady_tolerance),
        WLC_NUM("propagate.max_duration", propagate.max_duration),
        WLC_NUM("sweep.delta_min", sweep.delta_min),
        WLC_NUM("sweep.delta_max", sweep.delta_max),
        WLC_INT("sweep.points", sweep.points),
        WLC_METHOD("sweep.method", sweep.method),
        WLC_NUM("sweep.fit_window", sweep.fit_window),
        WLC_INT("sweep.fit_points", sweep.fit_points),
        WLC_NUM("cavity.length", cavity.length),
        WLC_NUM("cavity.finesse", cavity.finesse),
        WLC_BOOL("cavity.include_medium_amplitude", cavity.include_medium_amplitude),
        WLC_BOOL("cavity.lock_resonance", cavity.lock_resonance),
        WLC_BOOL("cavity.solve_geometry", cavity.solve_geometry),
        WLC_METHOD("cavity.sweep_method", cavity.sweep_method),
        WLC_NUM("cavity.mismatch", cavity.mismatch),
        WLC_NUM("cavity.profile_half_range", cavity.profile_half_range),
        WLC_INT("cavity.profile_points", cavity.profile_points),
        WLC_NUM("cavity.flatness_window", cavity.flatness_window),
        WLC_LIST("group_index.detunings", group_index.detunings),
        WLC_LIST("group_index.bandwidths", group_index.bandwidths),
        WLC_LIST("scaling.finesses", scaling.finesses),
        WLC_BOOL("run.suppress_4wm", run.suppress_4wm),
        WLC_INT("run.snapshots", run.snapshots),
        WLC_INT("run.jobs", run.jobs),
        Entry{"run.out", [](ScenarioConfig& c, const std::string& v) { c.run.out = trim(v); },
              [](const ScenarioConfig& c) { return c.run.out; }},
        WLC_NUM("run.calibration_target", run.calibration_target),
    };
    return table;
}

#undef WLC_NUM
#undef WLC_INT
#undef WLC_BOOL
#undef WLC_LIST
#undef WLC_METHOD
#undef WLC_RABI

const Entry* find_entry(const std::string& key) {
    for (const Entry& e : entries())
        if (e.key == key) return &e;
    return nullptr;
}

void validate(const ScenarioConfig& c) {
    c.medium.validate();
    c.grid.validate(c.medium);
    auto require = [](bool ok, const char* msg) {
        if (!ok) fail(ErrorCode::InvalidArgument, msg);
    };
    require(c.controls.finite(), "control amplitudes must be finite");
    require(c.probe.amplitude > 0.0, "probe amplitude must be positive");
    require(c.probe.bandwidth > 0.0, "probe bandwidth must be positive");
    require(c.probe.ramp > 0.0, "probe ramp must be positive");
    require(c.prepare.initial_ground_weight >= 0.0 && c.prepare.initial_ground_weight <= 1.0,
            "ground weight must lie in [0, 1]");
    require(c.prepare.ramp > 0.0 && c.prepare.check_window > 0.0 && c.prepare.tolerance > 0.0 &&
                c.prepare.max_duration > 0.0,
            "prepare settings must be positive");
    require(c.propagate.check_window > 0.0 && c.propagate.steady_tolerance > 0.0 &&
                c.propagate.max_duration > 0.0,
            "propagate settings must be positive");
    require(c.sweep.delta_min < c.sweep.delta_max, "sweep range is empty");
    require(c.sweep.points >= 2, "sweep needs at least 2 points");
    require(c.sweep.fit_window > 0.0, "fit window must be positive");
    require(c.sweep.fit_points >= 2, "fit sweep needs at least 2 points");
    require(c.cavity.length > 0.0, "cavity length must be positive");
    require(c.cavity.finesse > 0.0, "finesse must be positive");
    require(c.cavity.mismatch > -1.0, "mismatch must exceed -1");
    require(c.cavity.profile_half_range > 0.0, "profile range must be positive");
    require(c.cavity.profile_points >= 3, "profile needs at least 3 points");
    require(c.cavity.flatness_window > 0.0, "flatness window must be positive");
    for (double b : c.group_index.bandwidths) require(b > 0.0, "bandwidths must be positive");
    for (double f : c.scaling.finesses) require(f > 0.0, "finesses must be positive");
    require(c.run.snapshots >= 0, "snapshot count must be non-negative");
    require(c.run.jobs >= 1, "jobs must be at least 1");
    require(!c.run.out.empty(), "output directory must be named");
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Entry& e : entries()) out.push_back(e.key);
    return out;
}

Override parse_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        fail(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
    Override o{trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))};
    if (o.key.find('.') == std::string::npos)
        fail(ErrorCode::ConfigError, "override key '" + o.key + "' needs a section prefix");
    return o;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source,
                            const std::vector<Override>& overrides) {
    struct Value {
        std::string text;
        std::string where;
    };
    std::map<std::string, Value> values;

    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string where = source + ":" + std::to_string(number);
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3)
                fail(ErrorCode::ConfigError, where + ": malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(ErrorCode::ConfigError, where + ": expected key = value");
        if (section.empty()) fail(ErrorCode::ConfigError, where + ": key outside a section");
        const std::string key = section + "." + trim(body.substr(0, eq));
        if (!find_entry(key)) fail(ErrorCode::ConfigError, where + ": unknown key '" + key + "'");
        if (values.count(key))
            fail(ErrorCode::ConfigError, where + ": duplicate key '" + key + "'");
        values[key] = {trim(body.substr(eq + 1)), where};
    }
    for (const Override& o : overrides) {
        if (!find_entry(o.key)) fail(ErrorCode::ConfigError, "override: unknown key '" + o.key + "'");
        values[o.key] = {o.value, "override " + o.key};
    }

    ScenarioConfig cfg;
    for (const auto& [key, value] : values) {
        try {
            find_entry(key)->set(cfg, value.text);
        } catch (const std::invalid_argument& e) {
            fail(ErrorCode::ConfigError, value.where + ": " + key + ": " + e.what());
        }
    }
    try {
        validate(cfg);
    } catch (const Error& e) {
        std::string msg = e.what();
        const std::string prefix = std::string(error_name(e.code())) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        fail(e.code(), source + ": " + msg);
    }
    for (const Entry& e : entries()) cfg.echo.emplace_back(e.key, e.get(cfg));
    return cfg;
}

ScenarioConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path, overrides);
}

}  // namespace wlc
