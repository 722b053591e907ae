#include "wlc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wlc {

namespace fs = std::filesystem;

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"propagate", "susceptibility", "group-index",
                                                   "cavity",    "scaling",        "calibrate"};
    return names;
}

namespace {

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::string& scenario, const ScenarioConfig& cfg,
            const std::vector<std::string>& columns)
        : path_(path), out_(path) {
        if (!out_) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
        out_ << "# wlc " << kVersion << "\n# scenario: " << scenario << "\n";
        for (const auto& [key, value] : cfg.echo) out_ << "# " << key << " = " << value << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_value(values[i]);
        out_ << "\n";
    }

    void raw(const std::string& line) { out_ << line << "\n"; }
    void note(const std::string& text) { out_ << "# " << text << "\n"; }
    void note(const std::string& key, double value) { note(key + "=" + format_value(value)); }

    std::string close() {
        out_.close();
        if (!out_) fail(ErrorCode::IoError, "failed writing '" + path_.string() + "'");
        return path_.string();
    }

private:
    fs::path path_;
    std::ofstream out_;
};

class Summary {
public:
    void add(const std::string& key, double value) { lines_ << key << ": " << format_value(value) << "\n"; }
    void add(const std::string& key, const std::string& value) { lines_ << key << ": " << value << "\n"; }
    std::string str() const { return lines_.str(); }

private:
    std::ostringstream lines_;
};

FieldAmplitudes controls_of(const ScenarioConfig& cfg) {
    return {cfg.controls.omega31, cfg.controls.omega42, 0.0, 0.0};
}

SweepOptions sweep_options(const ScenarioConfig& cfg, SweepMethod method) {
    SweepOptions o;
    o.method = method;
    o.probe_amplitude = cfg.probe.amplitude;
    o.jobs = cfg.run.jobs;
    o.propagate = cfg.propagate;
    o.prepare = cfg.prepare;
    return o;
}

// Gaussian runs last long enough for the pulse to pass completely.
Grid pulse_grid(const Grid& grid, const ProbeWaveform& pulse) {
    Grid g = grid;
    g.duration = std::max(g.duration, pulse.peak_time() + 6.0 * pulse.sigma());
    return g;
}

std::string suffix(const ScenarioConfig& cfg) { return cfg.run.suppress_4wm ? "_no4wm" : ""; }

std::vector<std::string> envelope_columns(const std::string& first) {
    std::vector<std::string> cols{first};
    for (Field f : kAllFields) {
        cols.push_back(std::string(field_name(f)) + "_re");
        cols.push_back(std::string(field_name(f)) + "_im");
    }
    return cols;
}

std::vector<double> envelope_row(double x, const std::array<std::vector<cplx>, 4>& fields,
                                 std::size_t i) {
    std::vector<double> row{x};
    for (int f = 0; f < 4; ++f) {
        row.push_back(fields[f][i].real());
        row.push_back(fields[f][i].imag());
    }
    return row;
}

void record_failures(ScenarioOutcome& out, const std::vector<SweepFailure>& failures) {
    if (failures.empty()) return;
    out.partial_failure = failures.front().code;
    out.partial_message = std::to_string(failures.size()) + " sweep point(s) failed, first at delta=" +
                          format_value(failures.front().delta) + ": " + failures.front().message;
}

// --- propagate -------------------------------------------------------------

ScenarioOutcome run_propagate(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const MediumSpec& medium = cfg.medium;
    const PreparedMedium prepared = prepare_medium(medium, controls_of(cfg), cfg.grid, cfg.prepare);
    const std::string sfx = suffix(cfg);

    PropagateOptions popt = cfg.propagate;
    popt.suppress_4wm = cfg.run.suppress_4wm;

    ProbeWaveform cw = cfg.probe;
    cw.kind = ProbeWaveform::Kind::ContinuousWave;
    const FieldRecord steady = propagate(medium, cfg.grid, prepared, cw, popt);
    {
        CsvFile csv(dir / ("fields_cw" + sfx + ".csv"), "propagate", cfg, envelope_columns("z_m"));
        for (std::size_t i = 0; i < steady.z.size(); ++i)
            csv.row(envelope_row(steady.z[i], steady.final_profile, i));
        out.files.push_back(csv.close());
    }
    const auto probe = idx(Field::Probe41);
    const double t31 = std::abs(prepared.control31.back()) / std::abs(prepared.control31.front());
    const double t42 = std::abs(prepared.control42.back()) / std::abs(prepared.control42.front());
    const double gain = std::norm(steady.exit_steady[probe] / steady.entry_steady[probe]) - 1.0;
    const double generated =
        std::abs(steady.exit_steady[idx(Field::Generated32)]) / std::abs(steady.entry_steady[probe]);
    sum.add("control31_transmission", t31);
    sum.add("control42_transmission", t42);
    sum.add("probe_intensity_gain", gain);
    sum.add("generated_over_probe", generated);

    ProbeWaveform pulse = cfg.probe;
    pulse.kind = ProbeWaveform::Kind::Gaussian;
    PropagateOptions gopt = popt;
    const int frames = cfg.run.snapshots;
    std::vector<double> offsets;
    if (frames > 0) {
        gopt.record_snapshots = true;
        offsets = frames == 1 ? std::vector<double>{0.0}
                              : linspace(-1.5 * pulse.sigma(), 1.5 * pulse.sigma(), frames);
        for (double o : offsets) gopt.snapshot_times.push_back((pulse.peak_time() + o) / medium.gamma);
    }
    const FieldRecord rec = propagate(medium, pulse_grid(cfg.grid, pulse), prepared, pulse, gopt);

    {
        CsvFile csv(dir / ("pulse" + sfx + ".csv"), "propagate", cfg,
                    {"tau_s", "entry_re", "entry_im", "exit_re", "exit_im"});
        const std::size_t n = std::min(rec.entry_time.size(), rec.exit_time.size());
        for (std::size_t i = 0; i < n; ++i) {
            csv.row({rec.entry_time[i] / medium.gamma, rec.entry[probe][i].real(),
                     rec.entry[probe][i].imag(), rec.exit[probe][i].real(), rec.exit[probe][i].imag()});
        }
        out.files.push_back(csv.close());
    }

    if (frames > 0) {
        CsvFile index(dir / ("snapshots" + sfx + ".csv"), "propagate", cfg,
                      {"snapshot", "time_s", "offset_s"});
        for (std::size_t s = 0; s < rec.snapshots.size(); ++s) {
            char name[64];
            std::snprintf(name, sizeof name, "snapshot%s_%02zu.csv", sfx.c_str(), s);
            CsvFile csv(dir / name, "propagate", cfg, envelope_columns("z_m"));
            csv.note("time_s", rec.snapshots[s].time);
            for (std::size_t i = 0; i < rec.z.size(); ++i)
                csv.row(envelope_row(rec.z[i], rec.snapshots[s].fields, i));
            out.files.push_back(csv.close());
            index.row({static_cast<double>(s), rec.snapshots[s].time, offsets[s] / medium.gamma});
            index.note("file " + std::to_string(s) + " = " + name);
        }
        out.files.push_back(index.close());
    }

    const double advancement = peak_advancement(rec);
    sum.add("pulse_advancement_s", advancement);
    sum.add("pulse_group_index", group_index(advancement, medium.length));
    try {
        const PeakTrajectory tr = peak_trajectory(rec);
        sum.add("peak_trajectory_slope_s_per_m", tr.slope);
        sum.add("peak_reversed_fraction", tr.monotone_fraction);
    } catch (const Error& e) {
        sum.add("peak_trajectory", e.what());
    }
    sum.add("vacuum_transit_s", medium.length / kSpeedOfLight);

    {
        CsvFile csv(dir / ("propagate_summary" + sfx + ".csv"), "propagate", cfg, {"quantity", "value"});
        std::istringstream lines(sum.str());
        std::string line;
        while (std::getline(lines, line)) {
            const auto colon = line.find(": ");
            csv.raw(line.substr(0, colon) + "," + line.substr(colon + 2));
        }
        out.files.push_back(csv.close());
    }
    out.summary = sum.str();
    return out;
}

// --- susceptibility ----------------------------------------------------------

void write_curve(CsvFile& csv, const SusceptibilityCurve& curve,
                 const std::vector<SweepFailure>& failures) {
    std::size_t i = 0, j = 0;
    while (i < curve.size() || j < failures.size()) {
        if (j < failures.size() && (i >= curve.size() || failures[j].delta < curve.delta[i])) {
            csv.note("error delta=" + format_value(failures[j].delta) + " " + failures[j].message);
            csv.row({failures[j].delta, std::nan(""), std::nan("")});
            ++j;
        } else {
            csv.row({curve.delta[i], curve.chi_re[i], curve.chi_im[i]});
            ++i;
        }
    }
}

ScenarioOutcome run_susceptibility(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const SweepResult sweep = sweep_susceptibility(
        cfg.medium, cfg.grid, controls_of(cfg),
        linspace(cfg.sweep.delta_min, cfg.sweep.delta_max, cfg.sweep.points), cfg.run.suppress_4wm,
        sweep_options(cfg, cfg.sweep.method));
    CsvFile csv(dir / ("susceptibility" + suffix(cfg) + ".csv"), "susceptibility", cfg,
                {"delta_over_gamma", "chi_re", "chi_im"});
    write_curve(csv, sweep.curve, sweep.failures);
    try {
        const DispersionFit fit = fit_dispersion(sweep.curve, cfg.medium.omega0(), cfg.sweep.fit_window);
        csv.note("group_index", fit.group_index);
        csv.note("n3_s3", fit.n3);
        csv.note("fit_residual", fit.residual);
        sum.add("fit_group_index", fit.group_index);
        sum.add("fit_n3_s3", fit.n3);
    } catch (const Error& e) {
        csv.note(std::string("fit unavailable: ") + e.what());
        sum.add("fit", e.what());
    }
    out.files.push_back(csv.close());
    record_failures(out, sweep.failures);
    sum.add("points", static_cast<double>(sweep.curve.size()));
    out.summary = sum.str();
    return out;
}

// --- group-index -------------------------------------------------------------

ScenarioOutcome run_group_index(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const MediumSpec& medium = cfg.medium;
    const PreparedMedium prepared = prepare_medium(medium, controls_of(cfg), cfg.grid, cfg.prepare);
    PropagateOptions popt = cfg.propagate;
    popt.suppress_4wm = cfg.run.suppress_4wm;

    CsvFile csv(dir / ("group_index" + suffix(cfg) + ".csv"), "group-index", cfg,
                {"delta_over_gamma", "bandwidth_over_gamma", "advancement_s", "group_index"});
    std::vector<SweepFailure> failures;
    std::optional<double> resonant;
    for (double bandwidth : cfg.group_index.bandwidths) {
        for (double delta : cfg.group_index.detunings) {
            ProbeWaveform pulse = cfg.probe;
            pulse.kind = ProbeWaveform::Kind::Gaussian;
            pulse.detuning = delta;
            pulse.bandwidth = bandwidth;
            try {
                const FieldRecord rec =
                    propagate(medium, pulse_grid(cfg.grid, pulse), prepared, pulse, popt);
                const double ta = peak_advancement(rec);
                const double ng = group_index(ta, medium.length);
                csv.row({delta, bandwidth, ta, ng});
                if (delta == 0.0) {
                    if (!resonant) resonant = ng;
                    char key[64];
                    std::snprintf(key, sizeof key, "pulse_group_index_bw%g", bandwidth);
                    sum.add(key, ng);
                }
            } catch (const Error& e) {
                failures.push_back({delta, e.code(), e.what()});
                csv.note("error delta=" + format_value(delta) + " bandwidth=" + format_value(bandwidth) +
                         " " + e.what());
                csv.row({delta, bandwidth, std::nan(""), std::nan("")});
            }
        }
    }
    try {
        const DispersionFit fit =
            resonant_dispersion(medium, cfg.grid, controls_of(cfg), cfg.sweep.fit_window,
                                cfg.sweep.fit_points, cfg.run.suppress_4wm,
                                sweep_options(cfg, cfg.sweep.method));
        csv.note("fit_group_index", fit.group_index);
        csv.note("fit_n3_s3", fit.n3);
        sum.add("fit_group_index", fit.group_index);
        if (resonant) {
            const double rel = std::abs(*resonant - fit.group_index) / std::abs(fit.group_index);
            csv.note("pulse_vs_fit_relative_difference", rel);
            sum.add("pulse_group_index", *resonant);
            sum.add("pulse_vs_fit_relative_difference", rel);
        }
    } catch (const Error& e) {
        csv.note(std::string("fit unavailable: ") + e.what());
        sum.add("fit", e.what());
    }
    out.files.push_back(csv.close());
    record_failures(out, failures);
    out.summary = sum.str();
    return out;
}

// --- cavity and scaling ------------------------------------------------------

struct CavityMedium {
    double length = 0.0;
    double group_index = 0.0;
    double n3 = 0.0;
    double residual = 0.0;
    int iterations = 0;
    SusceptibilityCurve curve;
};

CavityMedium cavity_medium(const ScenarioConfig& cfg) {
    const bool suppress = cfg.run.suppress_4wm;
    const SweepOptions so = sweep_options(cfg, cfg.cavity.sweep_method);
    MediumSpec m = cfg.medium;
    CavityMedium out;
    out.length = m.length;
    if (cfg.cavity.solve_geometry) {
        auto ng_at = [&](double l) {
            MediumSpec trial = m;
            trial.length = l;
            return resonant_dispersion(trial, cfg.grid, controls_of(cfg), cfg.sweep.fit_window,
                                       cfg.sweep.fit_points, suppress, so)
                .group_index;
        };
        const WlcGeometry g = solve_wlc_geometry(ng_at, cfg.cavity.length, m.length);
        out.length = g.medium_length;
        out.residual = g.residual;
        out.iterations = g.iterations;
    }
    m.length = out.length;
    SweepResult sweep = sweep_susceptibility(
        m, cfg.grid, controls_of(cfg),
        linspace(cfg.sweep.delta_min, cfg.sweep.delta_max, cfg.sweep.points), suppress, so);
    if (!sweep.failures.empty()) {
        const SweepFailure& f = sweep.failures.front();
        fail(f.code, "cavity medium sweep at delta=" + format_value(f.delta) + ": " + f.message);
    }
    const DispersionFit fit = fit_dispersion(sweep.curve, m.omega0(), cfg.sweep.fit_window);
    out.group_index = fit.group_index;
    out.n3 = fit.n3;
    if (!cfg.cavity.solve_geometry)
        out.residual = std::abs(fit.group_index * out.length / cfg.cavity.length + 1.0);
    out.curve = std::move(sweep.curve);
    return out;
}

RoundTripOptions roundtrip_options(const ScenarioConfig& cfg) {
    RoundTripOptions o;
    o.include_amplitude = cfg.cavity.include_medium_amplitude;
    o.lock_resonance = cfg.cavity.lock_resonance;
    return o;
}

void describe_medium(Summary& sum, CsvFile& csv, const CavityMedium& cm) {
    sum.add("medium_length_m", cm.length);
    sum.add("group_index", cm.group_index);
    sum.add("n3_s3", cm.n3);
    sum.add("wlc_residual", cm.residual);
    csv.note("medium_length_m", cm.length);
    csv.note("group_index", cm.group_index);
    csv.note("n3_s3", cm.n3);
    csv.note("wlc_residual", cm.residual);
}

ScenarioOutcome run_cavity(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const CavityMedium cm = cavity_medium(cfg);
    const SampledResponse response(cm.curve);
    const RoundTripOptions opts = roundtrip_options(cfg);
    const double omega0 = cfg.medium.omega0();
    const double gamma = cfg.medium.gamma;
    const double mismatch = cfg.cavity.mismatch;
    const CavitySpec cavity =
        CavitySpec::from_finesse(cfg.cavity.length * (1.0 + mismatch), cfg.cavity.finesse, omega0);

    const std::vector<double> deltas =
        linspace(-cfg.cavity.profile_half_range * gamma, cfg.cavity.profile_half_range * gamma,
                 cfg.cavity.profile_points);
    const ResonanceProfile empty = buildup_profile(cavity, nullptr, cm.length, deltas, opts);
    const ResonanceProfile full = buildup_profile(cavity, &response, cm.length, deltas, opts);
    const double gamma0 = empty_bandwidth(cavity);
    const double gamma1 = fwhm(full);
    const Flatness flat =
        quadratic_flatness(full.evaluate, cfg.cavity.flatness_window * gamma0);

    std::string mismatch_tag;
    if (mismatch != 0.0) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "_mismatch_%+g", mismatch);
        mismatch_tag = buf;
    }
    const std::string tag = suffix(cfg) + mismatch_tag;
    {
        CsvFile csv(dir / ("profile_empty" + mismatch_tag + ".csv"), "cavity", cfg, {"delta_rad_s", "buildup_normalized"});
        for (std::size_t i = 0; i < deltas.size(); ++i) csv.row({deltas[i], empty.buildup[i]});
        csv.note("gamma0_rad_s", gamma0);
        out.files.push_back(csv.close());
    }
    CsvFile csv(dir / ("profile" + tag + ".csv"), "cavity", cfg, {"delta_rad_s", "buildup_normalized"});
    for (std::size_t i = 0; i < deltas.size(); ++i) csv.row({deltas[i], full.buildup[i]});
    describe_medium(sum, csv, cm);
    csv.note("gamma0_rad_s", gamma0);
    csv.note("gamma1_rad_s", gamma1);
    csv.note("enhancement", gamma1 / gamma0);
    csv.note("quadratic", flat.quadratic);
    csv.note("quadratic_std_error", flat.std_error);
    sum.add("gamma0_rad_s", gamma0);
    sum.add("gamma0_over_gamma", gamma0 / gamma);
    sum.add("gamma1_rad_s", gamma1);
    sum.add("enhancement", gamma1 / gamma0);
    sum.add("quadratic", flat.quadratic);
    sum.add("quadratic_std_error", flat.std_error);
    if (cm.n3 > 0.0) {
        const double analytic = wlc_bandwidth_analytic(cavity, cm.length, cm.n3);
        csv.note("gamma1_analytic_rad_s", analytic);
        sum.add("gamma1_analytic_rad_s", analytic);
    }
    out.files.push_back(csv.close());
    out.summary = sum.str();
    return out;
}

ScenarioOutcome run_scaling(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const CavityMedium cm = cavity_medium(cfg);
    const SampledResponse response(cm.curve);
    const double gamma = cfg.medium.gamma;
    const ScalingResult res =
        enhancement_scaling(cfg.cavity.length, cfg.medium.omega0(), cfg.scaling.finesses, response,
                            cm.length, gamma, roundtrip_options(cfg));
    CsvFile csv(dir / ("scaling" + suffix(cfg) + ".csv"), "scaling", cfg,
                {"gamma0_rad_s", "ratio", "gamma0_over_gamma", "finesse", "gamma1_rad_s"});
    for (const ScalingSample& s : res.samples)
        csv.row({s.gamma0, s.ratio, s.gamma0 / gamma, s.finesse, s.gamma1});
    describe_medium(sum, csv, cm);
    csv.note("slope", res.slope);
    sum.add("slope", res.slope);
    for (const ScalingSample& s : res.samples)
        sum.add("enhancement_F" + std::to_string(static_cast<long>(std::lround(s.finesse))), s.ratio);
    out.files.push_back(csv.close());
    out.summary = sum.str();
    return out;
}

// --- calibrate ---------------------------------------------------------------

ScenarioOutcome run_calibrate(const ScenarioConfig& cfg, const fs::path& dir) {
    ScenarioOutcome out;
    Summary sum;
    const Calibration c = calibrate_coupling(cfg.medium, cfg.grid, controls_of(cfg),
                                             cfg.run.calibration_target, cfg.sweep.fit_window,
                                             cfg.sweep.fit_points,
                                             sweep_options(cfg, cfg.sweep.method));
    CsvFile csv(dir / "calibration.csv", "calibrate", cfg, {"coupling_calibration", "group_index"});
    csv.row({c.factor, c.group_index});
    out.files.push_back(csv.close());
    sum.add("coupling_calibration", c.factor);
    sum.add("group_index", c.group_index);
    sum.add("iterations", static_cast<double>(c.iterations));
    out.summary = sum.str();
    return out;
}

}  // namespace

ScenarioOutcome run_scenario(const std::string& name, const ScenarioConfig& config,
                             const std::string& out_dir) {
    const fs::path dir = out_dir.empty() ? fs::path(config.run.out) : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());

    if (name == "propagate") return run_propagate(config, dir);
    if (name == "susceptibility") return run_susceptibility(config, dir);
    if (name == "group-index") return run_group_index(config, dir);
    if (name == "cavity") return run_cavity(config, dir);
    if (name == "scaling") return run_scaling(config, dir);
    if (name == "calibrate") return run_calibrate(config, dir);
    fail(ErrorCode::InvalidArgument, "unknown subcommand '" + name + "'");
}

}  // namespace wlc
