#include "wlc/measurement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

namespace wlc {

void SusceptibilityCurve::validate() const {
    if (chi_re.size() != delta.size() || chi_im.size() != delta.size())
        fail(ErrorCode::InvalidArgument, "susceptibility columns differ in length");
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!std::isfinite(delta[i]) || !std::isfinite(chi_re[i]) || !std::isfinite(chi_im[i]))
            fail(ErrorCode::InvalidArgument, "susceptibility samples must be finite");
        if (i > 0 && !(delta[i] > delta[i - 1]))
            fail(ErrorCode::InvalidArgument, "detunings must be strictly increasing");
    }
}

ExtractedSusceptibility extract_susceptibility(cplx entry, cplx exit, double wave_number,
                                              double length, std::optional<double> previous_phase) {
    if (std::abs(entry) == 0.0) fail(ErrorCode::ZeroEntryAmplitude, "entry amplitude is zero");
    if (!(wave_number > 0.0) || !(length > 0.0))
        fail(ErrorCode::InvalidArgument, "wave number and length must be positive");
    const cplx ratio = exit / entry;
    double phase = std::arg(ratio);
    if (previous_phase) {
        const double turns = std::round((*previous_phase - phase) / (2.0 * kPi));
        phase += 2.0 * kPi * turns;
    }
    const double scale = 2.0 / (wave_number * length);
    return {scale * phase, -scale * std::log(std::abs(ratio)), phase};
}

namespace {

// Peak time of |series|^2 on a uniform time axis, refined by a parabola
// through the maximum and its neighbours.
double intensity_peak(const std::vector<double>& time, const std::vector<cplx>& series,
                      const char* which) {
    if (series.size() < 3 || time.size() != series.size())
        fail(ErrorCode::NoPeak, std::string(which) + " series is too short");
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = std::norm(series[i]);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best == 0 || best + 1 == series.size() || best_val <= 0.0)
        fail(ErrorCode::NoPeak, std::string(which) + " intensity has no interior maximum");
    const double p = std::norm(series[best - 1]);
    const double b = best_val;
    const double n = std::norm(series[best + 1]);
    const double denom = p - 2.0 * b + n;
    const double offset = denom != 0.0 ? 0.5 * (p - n) / denom : 0.0;
    const double step = time[best + 1] - time[best];
    return time[best] + offset * step;
}

}  // namespace

double peak_advancement(const FieldRecord& record) {
    if (!(record.gamma > 0.0)) fail(ErrorCode::InvalidArgument, "record carries no time scale");
    const auto probe = idx(Field::Probe41);
    const double entry_peak = intensity_peak(record.entry_time, record.entry[probe], "entry");
    const double exit_peak = intensity_peak(record.exit_time, record.exit[probe], "exit");
    return (entry_peak - exit_peak) / record.gamma;
}

double group_index(double advancement, double length) {
    if (!(length > 0.0)) fail(ErrorCode::InvalidArgument, "medium length must be positive");
    return -kSpeedOfLight * advancement / length;
}

PeakTrajectory peak_trajectory(const FieldRecord& record) {
    const auto& t = record.probe_peak_time;
    if (t.size() < 2 || t.size() != record.z.size())
        fail(ErrorCode::NoPeak, "record has no per-node peak times");
    for (double v : t)
        if (!std::isfinite(v)) fail(ErrorCode::NoPeak, "probe peak missing at some node");
    PeakTrajectory out;
    out.entry_time = t.front();
    out.exit_time = t.back();

    const std::size_t n = t.size();
    double mz = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mz += record.z[i];
        mt += t[i];
    }
    mz /= static_cast<double>(n);
    mt /= static_cast<double>(n);
    double szz = 0.0, szt = 0.0;
    int decreasing = 0;
    for (std::size_t i = 0; i < n; ++i) {
        szz += (record.z[i] - mz) * (record.z[i] - mz);
        szt += (record.z[i] - mz) * (t[i] - mt);
        if (i > 0 && t[i] < t[i - 1]) ++decreasing;
    }
    out.slope = szt / szz;
    out.monotone_fraction = static_cast<double>(decreasing) / static_cast<double>(n - 1);
    return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) return {};
    if (count == 1) return {lo};
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
    return out;
}

SweepResult sweep_susceptibility(const MediumSpec& medium, const Grid& grid,
                                 const FieldAmplitudes& controls,
                                 const std::vector<double>& deltas, bool suppress_4wm,
                                 const SweepOptions& options, const PreparedMedium* prepared) {
    medium.validate();
    if (deltas.empty()) fail(ErrorCode::InvalidArgument, "detuning list is empty");
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        if (!(deltas[i] > deltas[i - 1]))
            fail(ErrorCode::InvalidArgument, "detunings must be strictly increasing");
    }

    SweepResult result;
    const PreparedMedium* medium_state = prepared;
    if (options.method == SweepMethod::TimeDomain && medium_state == nullptr) {
        result.prepared = prepare_medium(medium, controls, grid, options.prepare);
        medium_state = &*result.prepared;
    }

    struct Point {
        bool ok = false;
        cplx entry;
        cplx exit;
        ErrorCode code = ErrorCode::NoConvergence;
        std::string message;
    };
    std::vector<Point> points(deltas.size());

    auto run_point = [&](std::size_t i) {
        Point& pt = points[i];
        try {
            if (options.method == SweepMethod::TimeDomain) {
                ProbeWaveform probe;
                probe.kind = ProbeWaveform::Kind::ContinuousWave;
                probe.amplitude = options.probe_amplitude;
                probe.detuning = deltas[i];
                PropagateOptions popt = options.propagate;
                popt.suppress_4wm = suppress_4wm;
                popt.record_snapshots = false;
                const FieldRecord rec = propagate(medium, grid, *medium_state, probe, popt);
                pt.entry = rec.entry_steady[idx(Field::Probe41)];
                pt.exit = rec.exit_steady[idx(Field::Probe41)];
            } else {
                FieldAmplitudes entry = controls;
                entry.omega41 = options.probe_amplitude;
                entry.omega32 = 0.0;
                const StationaryProfile st =
                    propagate_stationary(medium, grid.nz, entry, deltas[i], suppress_4wm);
                pt.entry = st.fields.front()[idx(Field::Probe41)];
                pt.exit = st.fields.back()[idx(Field::Probe41)];
            }
            pt.ok = true;
        } catch (const Error& e) {
            pt.code = e.code();
            pt.message = e.what();
        }
    };

    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(deltas.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < deltas.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < deltas.size(); i = next++) run_point(i);
            });
        }
        for (auto& w : workers) w.join();
    }

    // Phase continuation runs in detuning order over the completed points.
    SusceptibilityCurve& curve = result.curve;
    curve.length = medium.length;
    curve.wave_number = medium.wave_number();
    curve.gamma = medium.gamma;
    curve.suppressed_4wm = suppress_4wm;
    std::optional<double> previous;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        const Point& pt = points[i];
        if (!pt.ok) {
            result.failures.push_back({deltas[i], pt.code, pt.message});
            continue;
        }
        try {
            const ExtractedSusceptibility x =
                extract_susceptibility(pt.entry, pt.exit, curve.wave_number, curve.length, previous);
            previous = x.phase;
            curve.delta.push_back(deltas[i]);
            curve.chi_re.push_back(x.chi_re);
            curve.chi_im.push_back(x.chi_im);
        } catch (const Error& e) {
            result.failures.push_back({deltas[i], e.code(), e.what()});
        }
    }
    return result;
}

DispersionFit fit_dispersion(const SusceptibilityCurve& curve, double omega0, double window,
                             const FitOptions& options) {
    curve.validate();
    if (!(window > 0.0)) fail(ErrorCode::IllConditionedFit, "fit window must be positive");
    if (!(curve.gamma > 0.0)) fail(ErrorCode::InvalidArgument, "curve carries no time scale");
    if (curve.size() == 0 || curve.delta.front() > -window || curve.delta.back() < window)
        fail(ErrorCode::IllConditionedFit, "fit window exceeds the sampled range");

    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (std::abs(curve.delta[i]) <= window * (1.0 + 1e-12)) {
            x.push_back(curve.delta[i]);
            y.push_back(0.5 * curve.chi_re[i]);
        }
    }
    const int m = static_cast<int>(x.size());
    if (m < options.min_samples)
        fail(ErrorCode::IllConditionedFit, "fit window holds only " + std::to_string(m) +
                                               " samples");

    // Fit in units of gamma scaled by the window so the columns are O(1).
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        const double u = x[i] / window;
        a(i, 0) = u;
        a(i, 1) = u * u * u;
        b(i) = y[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(1) < 1e-8 * sv(0)) fail(ErrorCode::IllConditionedFit, "fit columns are collinear");
    const Eigen::Vector2d coef = svd.solve(b);

    const double rms_signal = std::sqrt(b.squaredNorm() / m);
    const double rms_residual = std::sqrt((a * coef - b).squaredNorm() / m);
    if (rms_signal > 0.0 && rms_residual > options.max_relative_residual * rms_signal)
        fail(ErrorCode::IllConditionedFit, "odd-cubic model leaves a large residual");

    const double unit = window * curve.gamma;  // rad/s per scaled unit
    DispersionFit fit;
    fit.group_index = coef(0) / unit * omega0;
    fit.n3 = coef(1) / (unit * unit * unit);
    fit.window = window;
    fit.residual = rms_residual;
    fit.samples = m;
    return fit;
}

cplx averaged_single_atom_susceptibility(const MediumSpec& medium,
                                         const PreparedMedium& prepared, double delta) {
    const std::size_t n = prepared.control31.size();
    if (n < 2 || prepared.control42.size() != n)
        fail(ErrorCode::InvalidArgument, "prepared medium has no control profile");
    cplx sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const FieldAmplitudes local{prepared.control31[i], prepared.control42[i], 0.0, 0.0};
        const cplx a = linear_probe_susceptibility(local, medium.scheme, delta, false);
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        sum += w * a;
    }
    const cplx mean = sum / static_cast<double>(n - 1);
    return 2.0 * medium.couplings().eta41 * mean / medium.wave_number();
}

DispersionFit resonant_dispersion(const MediumSpec& medium, const Grid& grid,
                                  const FieldAmplitudes& controls, double window, int points,
                                  bool suppress_4wm, const SweepOptions& options,
                                  const FitOptions& fit) {
    const SweepResult sweep = sweep_susceptibility(medium, grid, controls,
                                                   linspace(-window, window, points),
                                                   suppress_4wm, options);
    if (!sweep.failures.empty()) {
        const SweepFailure& f = sweep.failures.front();
        fail(f.code, "sweep point " + std::to_string(f.delta) + ": " + f.message);
    }
    return fit_dispersion(sweep.curve, medium.omega0(), window, fit);
}

Calibration calibrate_coupling(MediumSpec medium, const Grid& grid, const FieldAmplitudes& controls,
                               double target, double window, int points,
                               const SweepOptions& options, double tolerance,
                               int max_iterations) {
    if (!(target < 0.0)) fail(ErrorCode::InvalidArgument, "target group index must be negative");
    auto evaluate = [&](double factor) {
        medium.coupling_calibration = factor;
        return resonant_dispersion(medium, grid, controls, window, points, false, options)
            .group_index;
    };
    double x0 = medium.coupling_calibration > 0.0 ? medium.coupling_calibration : 1.0;
    double x1 = 1.1 * x0;
    double f0 = evaluate(x0) - target;
    double f1 = evaluate(x1) - target;
    for (int it = 1; it <= max_iterations; ++it) {
        if (std::abs(f1) < tolerance) return {x1, f1 + target, it};
        if (f1 == f0) break;
        double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 > 0.0)) x2 = 0.5 * x1;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = evaluate(x1) - target;
    }
    fail(ErrorCode::NoConvergence, "coupling calibration did not reach the target group index");
}

}  // namespace wlc
