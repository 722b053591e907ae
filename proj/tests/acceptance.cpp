// Acceptance gate. Prints one PASS/FAIL line per criterion with the measured
// values and the wall time. Criteria marked as known gaps are run at their
// full tolerance and reported, but do not change the exit status; see the
// README section on reproduction limits.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "wlc/cavity.hpp"
#include "wlc/config.hpp"
#include "wlc/errors.hpp"
#include "wlc/scenario.hpp"

using namespace wlc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<std::string> notes;  // printed indented under the verdict
};

struct Criterion {
    std::string name;
    double budget_s;
    bool known_gap;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Summary "key: value" lines; looking up a missing key throws.
class Values {
public:
    explicit Values(std::map<std::string, double> v) : v_(std::move(v)) {}
    double operator[](const std::string& key) const {
        const auto it = v_.find(key);
        if (it == v_.end()) throw std::runtime_error("summary lacks '" + key + "'");
        return it->second;
    }
    bool count(const std::string& key) const { return v_.count(key) != 0; }

private:
    std::map<std::string, double> v_;
};

Values parse_summary(const std::string& text) {
    std::map<std::string, double> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        try {
            out[line.substr(0, colon)] = std::stod(line.substr(colon + 2));
        } catch (const std::exception&) {
        }
    }
    return Values(std::move(out));
}

const double kOmega0 = 2.0 * kPi * kSpeedOfLight / 780e-9;
const double kGamma = 2.0 * kPi * 6e6;

ScenarioConfig paper_config(std::vector<Override> overrides = {}) {
    return load_config(WLC_PAPER_CFG, overrides);
}

fs::path out_dir() {
    static const fs::path p = [] {
        const fs::path d = fs::temp_directory_path() / "wlc_acceptance";
        fs::remove_all(d);
        return d;
    }();
    return p;
}

// --- oracles -----------------------------------------------------------------

Outcome empty_cavity() {
    Outcome o;
    double worst = 0.0;
    for (double f : {100.0, 1000.0, 1e4}) {
        const CavitySpec c = CavitySpec::from_finesse(0.595, f, kOmega0);
        const double g0 = empty_bandwidth(c);
        const double w = scan_fwhm([&](double d) { return buildup(d, c, nullptr, 0.0); }, 0.0, g0 / 50.0, 5.0 * g0);
        const double err = std::abs(w - g0) / g0;
        worst = std::max(worst, err);
        o.notes.push_back("F=" + fmt("%g", f) + " gamma0=" + fmt("%.6e", g0) + " rad/s, rel err " + fmt("%.2e", err));
    }
    o.pass = worst < 1e-4;
    o.detail = "max relative error " + fmt("%.2e", worst) + " (< 1e-4)";
    return o;
}

Outcome analytic_wlc() {
    Outcome o;
    const double L = 0.595, l = 0.2975, n3 = 5e-32;
    const PolynomialResponse medium(-L / l, n3, kOmega0);
    const CavitySpec c = CavitySpec::from_finesse(L, 1000.0, kOmega0);
    const double g0 = empty_bandwidth(c);
    const double numeric = scan_fwhm([&](double d) { return buildup(d, c, &medium, l); }, 0.0, g0 / 20.0, 1e4 * g0);
    const double analytic = wlc_bandwidth_analytic(c, l, n3);
    const double err = std::abs(numeric - analytic) / analytic;
    o.pass = err < 0.01;
    o.detail = "numeric " + fmt("%.6e", numeric) + " vs closed form " + fmt("%.6e", analytic) +
               " rad/s, rel err " + fmt("%.2e", err) + " (< 1%)";
    return o;
}

Outcome scaling_law() {
    Outcome o;
    const double L = 0.595, l = 0.2975;
    const PolynomialResponse medium(-L / l, 5e-32, kOmega0);
    const ScalingResult r =
        enhancement_scaling(L, kOmega0, {100.0, 300.0, 1000.0, 3000.0, 1e4}, medium, l, kGamma);
    const double decades = std::log10(r.samples.front().gamma0 / r.samples.back().gamma0);
    o.pass = std::abs(r.slope + 2.0 / 3.0) <= 0.01 && decades >= 1.5;
    o.detail = "slope " + fmt("%.5f", r.slope) + " (-2/3 +- 0.01) over " + fmt("%.2f", decades) + " decades";
    return o;
}

// --- solver physics suite ------------------------------------------------------

Outcome physics_suite() {
    Outcome o;
    bool ok = true;

    {
        const LevelScheme s;
        const FieldAmplitudes f{16.0, 15.5, 0.1, 0.05};
        const double dt = max_stable_step(f, s);
        AtomState a = AtomState::ground_mixture(0.5);
        double trace = 0.0, herm = 0.0, eig = 0.0;
        for (int i = 0; i < 10000; ++i) {
            a = evolve_atom_step(a, f, s, dt);
            trace = std::max(trace, a.trace_deviation());
            herm = std::max(herm, a.hermiticity_error());
            eig = std::min(eig, a.min_eigenvalue());
        }
        const bool pass = trace < 1e-10 && herm <= 1e-12 && eig >= -1e-8;
        ok = ok && pass;
        o.notes.push_back(std::string(pass ? "ok  " : "bad ") + "invariants over 1e4 steps: trace " +
                          fmt("%.1e", trace) + ", hermiticity " + fmt("%.1e", herm) + ", min eigenvalue " +
                          fmt("%.1e", eig));
    }

    {
        MediumSpec m;
        m.coupling_override = Couplings{};
        Grid g;
        g.nz = 512;
        g.frame = Frame::Lab;
        g.courant = 1.0;
        ProbeWaveform p;
        p.kind = ProbeWaveform::Kind::Gaussian;
        p.bandwidth = 50.0;
        g.duration = 2.0 * p.peak_time() + m.transit_time();
        PreparedMedium prep;
        prep.atoms.assign(g.nz + 1, AtomState::pure(kLevel1));
        prep.control31.assign(g.nz + 1, cplx{});
        prep.control42.assign(g.nz + 1, cplx{});
        const FieldRecord r = propagate(m, g, prep, p);
        const auto& in = r.entry[idx(Field::Probe41)];
        const auto& out = r.exit[idx(Field::Probe41)];
        double err = 0.0;
        for (std::size_t i = g.nz; i < in.size(); ++i) err = std::max(err, std::abs(in[i - g.nz] - out[i]));
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * p.amplitude;
        const bool pass = err <= tol && r.max_abs_generated == 0.0;
        ok = ok && pass;
        o.notes.push_back(std::string(pass ? "ok  " : "bad ") + "vacuum advection (lab frame, C=1, Nz=512): max |exit - entry| " +
                          fmt("%.1e", err) + " (<= " + fmt("%.1e", tol) + ")");
    }

    {
        const MediumSpec m;
        const cplx a = linear_probe_susceptibility({0.0, 15.5, 0.0, 0.0}, m.scheme, 0.0, false);
        const double chi_im = 2.0 * m.couplings().eta41 / m.wave_number() * a.imag();
        const bool pass = std::abs(a.imag()) < 1e-10 && std::abs(chi_im) < 1e-10;
        ok = ok && pass;
        o.notes.push_back(std::string(pass ? "ok  " : "bad ") + "dark state: Im rho41/Omega41 = " +
                          fmt("%.1e", a.imag()) + "/gamma, Im chi(0) = " + fmt("%.1e", chi_im));
    }

    {
        const ScenarioConfig cfg = paper_config();
        MediumSpec m = cfg.medium;
        m.density /= 100.0;
        const FieldAmplitudes controls = cfg.controls;
        const std::vector<double> d = linspace(-3.0, 3.0, 9);
        SweepOptions so;
        so.probe_amplitude = 1e-3;
        const SweepResult r = sweep_susceptibility(m, cfg.grid, controls, d, false, so);
        double dev = 0.0, peak = 0.0;
        const double scale = 2.0 * m.couplings().eta41 / m.wave_number();
        for (std::size_t i = 0; i < r.curve.size(); ++i) {
            const cplx oracle = scale * linear_probe_susceptibility(controls, m.scheme, r.curve.delta[i], false);
            dev = std::max(dev, std::abs(oracle - cplx{r.curve.chi_re[i], r.curve.chi_im[i]}));
            peak = std::max(peak, std::abs(oracle));
        }
        const bool pass = r.failures.empty() && dev < 0.01 * peak;
        ok = ok && pass;
        o.notes.push_back(std::string(pass ? "ok  " : "bad ") + "thin-medium cw sweep (Nz=" +
                          std::to_string(cfg.grid.nz) + ", 9 detunings): max deviation " +
                          fmt("%.2e", dev / peak) + " of peak |chi| (< 1%)");
    }

    o.pass = ok;
    o.detail = ok ? "all checks hold" : "a check failed";
    return o;
}

// --- paper reproduction --------------------------------------------------------

struct Band {
    const char* what;
    double value, lo, hi;
};

Outcome paper_reproduction() {
    Outcome o;
    const ScenarioConfig cfg = paper_config();
    const ScenarioConfig no4wm = paper_config({{"run.suppress_4wm", "true"}});
    auto prop = parse_summary(run_scenario("propagate", cfg, out_dir().string()).summary);
    auto sus = parse_summary(run_scenario("susceptibility", cfg, out_dir().string()).summary);
    auto sus0 = parse_summary(run_scenario("susceptibility", no4wm, out_dir().string()).summary);
    auto cav = parse_summary(run_scenario("cavity", cfg, out_dir().string()).summary);
    auto cav0 = parse_summary(run_scenario("cavity", no4wm, out_dir().string()).summary);

    const std::vector<Band> bands = {
        {"control31 amplitude transmission", prop["control31_transmission"], 0.45, 0.75},
        {"control42 amplitude transmission", prop["control42_transmission"], 0.45, 0.75},
        {"probe intensity gain", prop["probe_intensity_gain"], 0.05, 0.15},
        {"enhancement with 4WM at F=1000", cav["enhancement"], 30.0 * 0.7, 30.0 * 1.3},
        {"enhancement without 4WM at F=1000", cav0["enhancement"], 20.0 * 0.7, 20.0 * 1.3},
    };
    bool ok = true;
    for (const Band& b : bands) {
        const bool pass = b.value >= b.lo && b.value <= b.hi;
        ok = ok && pass;
        o.notes.push_back(std::string(pass ? "ok  " : "bad ") + b.what + " " + fmt("%.4g", b.value) + " (target [" +
                          fmt("%.3g", b.lo) + ", " + fmt("%.3g", b.hi) + "])");
    }
    const double adv = prop["pulse_advancement_s"];
    const double slope = prop["peak_trajectory_slope_s_per_m"];
    const bool advance = adv > 0.0 && slope < 0.0;
    ok = ok && advance;
    o.notes.push_back(std::string(advance ? "ok  " : "bad ") + "pulse advancement " + fmt("%.3e", adv) +
                      " s, in-medium peak slope " + fmt("%.3e", slope) + " s/m (want > 0 and < 0)");
    const double ng = sus["fit_group_index"], ng0 = sus0["fit_group_index"];
    const bool order = std::abs(ng) < std::abs(ng0);
    ok = ok && order;
    o.notes.push_back(std::string(order ? "ok  " : "bad ") + "|n_g| with 4WM " + fmt("%.4f", std::abs(ng)) +
                      " < without " + fmt("%.4f", std::abs(ng0)));
    o.pass = ok;
    o.detail = ok ? "all features reproduced" : "some features outside their bands";
    return o;
}

Outcome pulse_vs_fit() {
    Outcome o;
    const ScenarioConfig cfg =
        paper_config({{"group_index.bandwidths", "0.5,0.25"}, {"group_index.detunings", "0"}});
    const ScenarioOutcome r = run_scenario("group-index", cfg, out_dir().string());
    auto s = parse_summary(r.summary);
    double worst = 0.0;
    bool ok = !r.partial_failure;
    for (const char* bw : {"0.5", "0.25"}) {
        const std::string key = std::string("pulse_group_index_bw") + bw;
        if (!s.count(key)) {
            ok = false;
            o.notes.push_back(std::string("bad missing ") + key);
            continue;
        }
        const double rel = std::abs(s[key] - s["fit_group_index"]) / std::abs(s["fit_group_index"]);
        worst = std::max(worst, rel);
        o.notes.push_back(std::string(rel < 0.05 ? "ok  " : "bad ") + "bandwidth " + bw + " gamma: pulse n_g " +
                          fmt("%.4f", s[key]) + " vs fit " + fmt("%.4f", s["fit_group_index"]));
    }
    o.pass = ok && worst < 0.05;
    o.detail = "max relative difference " + fmt("%.3f", worst) + " (< 5%)";
    return o;
}

Outcome mismatch() {
    Outcome o;
    std::vector<std::pair<double, Values>> runs;
    for (const char* m : {"0", "0.02", "-0.02", "-0.04"}) {
        const ScenarioConfig cfg = paper_config({{"cavity.mismatch", m}});
        runs.emplace_back(std::stod(m), parse_summary(run_scenario("cavity", cfg, out_dir().string()).summary));
    }
    for (auto& [m, s] : runs)
        o.notes.push_back("mismatch " + fmt("%+.2f", m) + ": quadratic " + fmt("%.3e", s["quadratic"]) + " +- " +
                          fmt("%.1e", s["quadratic_std_error"]) + ", enhancement " + fmt("%.2f", s["enhancement"]));
    // curvature must grow with |mismatch| along each side and overall
    auto curv = [&](std::size_t i) { return std::abs(runs[i].second["quadratic"]); };
    const bool monotone = curv(0) < curv(1) && curv(0) < curv(2) && curv(2) < curv(3) && curv(1) < curv(3);
    bool enhanced = true;
    for (std::size_t i = 1; i < runs.size(); ++i) enhanced = enhanced && runs[i].second["enhancement"] > 10.0;
    o.pass = monotone && enhanced;
    o.detail = std::string(monotone ? "curvature grows with |mismatch|" : "curvature not monotone") +
               (enhanced ? ", enhancement > 10 at every mismatch" : ", enhancement <= 10 somewhere");
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"empty-cavity oracle", 1.0, false, empty_cavity},
        {"analytic white-light oracle", 1.0, false, analytic_wlc},
        {"enhancement scaling law", 10.0, false, scaling_law},
        {"solver physics suite", 120.0, false, physics_suite},
        {"paper reproduction", 1800.0, true, paper_reproduction},
        {"mismatch behaviour", 1800.0, false, mismatch},
        {"pulse vs fit group index", 1800.0, true, pulse_vs_fit},
    };
    int failed = 0, unexpected = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        std::printf("%s %s: %s; %.2f s (budget %g s)%s\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                    o.detail.c_str(), secs, c.budget_s, !pass && c.known_gap ? " [known gap]" : "");
        for (const std::string& n : o.notes) std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
        if (!pass) {
            ++failed;
            if (!c.known_gap) ++unexpected;
        }
    }
    std::printf("%zu criteria, %d failed, %d unexpected\n", criteria.size(), failed, unexpected);
    return unexpected == 0 ? 0 : 1;
}
