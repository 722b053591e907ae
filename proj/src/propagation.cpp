#include "wlc/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "wlc/errors.hpp"

namespace wlc {

const char* field_name(Field f) {
    switch (f) {
        case Field::Control31: return "omega31";
        case Field::Control42: return "omega42";
        case Field::Probe41: return "omega41";
        case Field::Generated32: return "omega32";
    }
    return "?";
}

FieldArray to_array(const FieldAmplitudes& f) {
    return {f.omega31, f.omega42, f.omega41, f.omega32};
}

FieldAmplitudes to_amplitudes(const FieldArray& a) { return {a[0], a[1], a[2], a[3]}; }

void MediumSpec::validate() const {
    if (!(length > 0.0) || !std::isfinite(length))
        fail(ErrorCode::InvalidArgument, "medium length must be positive");
    if (!(density > 0.0) || !std::isfinite(density))
        fail(ErrorCode::InvalidArgument, "atom density must be positive");
    if (!(wavelength > 0.0)) fail(ErrorCode::InvalidArgument, "wavelength must be positive");
    if (!(gamma > 0.0)) fail(ErrorCode::InvalidArgument, "reference rate must be positive");
    if (!(coupling_calibration >= 0.0))
        fail(ErrorCode::InvalidArgument, "coupling calibration must be non-negative");
    scheme.validate();
    for (double eta : couplings().as_array()) {
        if (!(eta >= 0.0) || !std::isfinite(eta))
            fail(ErrorCode::InvalidArgument, "coupling constants must be non-negative");
    }
}

Couplings MediumSpec::couplings() const {
    if (coupling_override) return *coupling_override;
    const double per_rate =
        coupling_calibration * 3.0 * density * wavelength * wavelength / (8.0 * kPi);
    return {per_rate * scheme.gamma31, per_rate * scheme.gamma42, per_rate * scheme.gamma41,
            per_rate * scheme.gamma32};
}

double Grid::step(const MediumSpec& m) const {
    if (frame == Frame::Lab) return courant * dz(m) / kSpeedOfLight * m.gamma;
    return dt;
}

double Grid::courant_number(const MediumSpec& m) const {
    return kSpeedOfLight * (step(m) / m.gamma) / dz(m);
}

void Grid::validate(const MediumSpec& m) const {
    if (nz < 16) fail(ErrorCode::InvalidArgument, "grid needs at least 16 cells");
    if (!(duration > 0.0)) fail(ErrorCode::InvalidArgument, "grid duration must be positive");
    if (frame == Frame::Lab) {
        if (!(courant > 0.0) || courant > 1.0)
            fail(ErrorCode::CflViolation, "Courant number " + std::to_string(courant) +
                                              " outside (0, 1]");
    } else if (!(dt > 0.0)) {
        fail(ErrorCode::InvalidArgument, "grid time step must be positive");
    }
    (void)m;
}

std::vector<cplx> lax_wendroff_step(std::span<const cplx> envelope,
                                    std::span<const cplx> source, cplx boundary,
                                    double courant, double dz) {
    if (!(courant > 0.0) || courant > 1.0)
        fail(ErrorCode::CflViolation, "Courant number " + std::to_string(courant) +
                                          " outside (0, 1]");
    const std::size_t n = envelope.size();
    if (n < 3 || source.size() != n)
        fail(ErrorCode::InvalidArgument, "envelope and source must share a length of at least 3");

    const double c = courant;
    const double step_len = c * dz;  // c * dt
    std::vector<cplx> out(n);
    out[0] = boundary;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const cplx& um = envelope[i - 1];
        const cplx& u0 = envelope[i];
        const cplx& up = envelope[i + 1];
        const cplx advect = u0 - 0.5 * c * (up - um) + 0.5 * c * c * (up - 2.0 * u0 + um);
        const cplx src = source[i] - 0.25 * c * (source[i + 1] - source[i - 1]);
        out[i] = advect + step_len * src;
    }
    const std::size_t last = n - 1;
    out[last] = envelope[last] - c * (envelope[last] - envelope[last - 1]) +
                step_len * source[last];
    return out;
}

FieldAmplitudes source_terms(const AtomState& state, const Couplings& k) {
    const cplx i(0.0, 1.0);
    const Matrix4c& r = state.rho();
    return {i * k.eta31 * r(kLevel3, kLevel1), i * k.eta42 * r(kLevel4, kLevel2),
            i * k.eta41 * r(kLevel4, kLevel1), i * k.eta32 * r(kLevel3, kLevel2)};
}

namespace {

FieldArray sources(const Matrix4c& r, const std::array<double, 4>& eta) {
    const cplx i(0.0, 1.0);
    return {i * eta[0] * r(kLevel3, kLevel1), i * eta[1] * r(kLevel4, kLevel2),
            i * eta[2] * r(kLevel4, kLevel1), i * eta[3] * r(kLevel3, kLevel2)};
}

// Smooth switch-on from 0 at tau = 0 to 1 at tau = ramp.
double ramp_shape(double tau, double ramp) {
    if (tau <= 0.0) return ramp > 0.0 ? 0.0 : 1.0;
    if (tau >= ramp) return 1.0;
    auto s = [](double x) { return 0.5 * (1.0 + std::tanh(8.0 * x - 4.0)); };
    const double s0 = s(0.0);
    return (s(tau / ramp) - s0) / (s(1.0) - s0);
}

using BoundaryFn = std::function<FieldArray(double)>;

// Retarded-frame method of lines: the state is the density matrix at every
// node; envelopes follow from trapezoidal integration of the sources in z.
class RetardedSolver {
public:
    RetardedSolver(const MediumSpec& medium, int nz, double dt, const LevelScheme& scheme,
                   std::array<bool, 4> clamped, BoundaryFn boundary,
                   std::vector<Matrix4c> initial)
        : scheme_(scheme),
          eta_(medium.couplings().as_array()),
          nz_(nz),
          dz_(medium.length / nz),
          dt_(dt),
          clamped_(clamped),
          boundary_(std::move(boundary)),
          rho_(std::move(initial)),
          stage_(rho_.size()),
          k_(rho_.size()),
          acc_(rho_.size()),
          fields_(rho_.size()),
          current_fields_(rho_.size()) {
        update_fields(rho_, tau_, current_fields_);
    }

    double tau() const { return tau_; }
    double dt() const { return dt_; }
    const std::vector<Matrix4c>& rho() const { return rho_; }
    // Fields consistent with the current density matrices and boundary.
    const std::vector<FieldArray>& fields() const { return current_fields_; }

    void step() {
        const std::size_t n = rho_.size();
        derivative(rho_, tau_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] = k_[i];
            stage_[i] = rho_[i] + (0.5 * dt_) * k_[i];
        }
        derivative(stage_, tau_ + 0.5 * dt_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            stage_[i] = rho_[i] + (0.5 * dt_) * k_[i];
        }
        derivative(stage_, tau_ + 0.5 * dt_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += 2.0 * k_[i];
            stage_[i] = rho_[i] + dt_ * k_[i];
        }
        derivative(stage_, tau_ + dt_, k_);
        for (std::size_t i = 0; i < n; ++i) {
            acc_[i] += k_[i];
            Matrix4c next = rho_[i] + (dt_ / 6.0) * acc_[i];
            rho_[i] = 0.5 * (next + next.adjoint());
            if (!rho_[i].allFinite() || std::abs(rho_[i].trace() - 1.0) > 1e-6)
                fail(ErrorCode::StepUnstable,
                     "trace drift at node " + std::to_string(i) + ", tau = " +
                         std::to_string(tau_));
        }
        tau_ += dt_;
        update_fields(rho_, tau_, current_fields_);
    }

private:
    void update_fields(const std::vector<Matrix4c>& rho, double tau,
                       std::vector<FieldArray>& out) const {
        FieldArray b = boundary_(tau);
        for (int f = 0; f < 4; ++f)
            if (clamped_[f]) b[f] = 0.0;
        out[0] = b;
        FieldArray s_prev = sources(rho[0], eta_);
        for (int i = 0; i < nz_; ++i) {
            const FieldArray s_next = sources(rho[i + 1], eta_);
            for (int f = 0; f < 4; ++f) {
                out[i + 1][f] = clamped_[f] ? cplx{} : out[i][f] + 0.5 * dz_ * (s_prev[f] + s_next[f]);
            }
            s_prev = s_next;
        }
    }

    void derivative(const std::vector<Matrix4c>& rho, double tau, std::vector<Matrix4c>& out) {
        update_fields(rho, tau, fields_);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const Matrix4c h = build_hamiltonian(to_amplitudes(fields_[i]), scheme_);
            out[i] = master_equation_rhs(rho[i], h, scheme_);
        }
    }

    LevelScheme scheme_;
    std::array<double, 4> eta_;
    int nz_;
    double dz_;
    double dt_;
    std::array<bool, 4> clamped_;
    BoundaryFn boundary_;
    std::vector<Matrix4c> rho_;
    std::vector<Matrix4c> stage_;
    std::vector<Matrix4c> k_;
    std::vector<Matrix4c> acc_;
    std::vector<FieldArray> fields_;
    std::vector<FieldArray> current_fields_;
    double tau_ = 0.0;
};

// Lab-frame integrator: Lax-Wendroff transport of each envelope with a
// time-centred source from a predictor step of the atoms.
class LabSolver {
public:
    LabSolver(const MediumSpec& medium, int nz, double courant, const LevelScheme& scheme,
              std::array<bool, 4> clamped, BoundaryFn boundary, std::vector<Matrix4c> initial,
              std::vector<FieldArray> initial_fields)
        : scheme_(scheme),
          eta_(medium.couplings().as_array()),
          nz_(nz),
          dz_(medium.length / nz),
          courant_(courant),
          dt_(courant * dz_ / kSpeedOfLight * medium.gamma),
          clamped_(clamped),
          boundary_(std::move(boundary)),
          rho_(std::move(initial)),
          fields_(std::move(initial_fields)) {
        for (auto& f : fields_)
            for (int k = 0; k < 4; ++k)
                if (clamped_[k]) f[k] = 0.0;
    }

    double tau() const { return t_; }
    double dt() const { return dt_; }
    const std::vector<Matrix4c>& rho() const { return rho_; }
    const std::vector<FieldArray>& fields() const { return fields_; }

    void step() {
        const std::size_t n = rho_.size();
        std::array<std::vector<cplx>, 4> envelope;
        std::array<std::vector<cplx>, 4> source;
        for (int f = 0; f < 4; ++f) {
            envelope[f].resize(n);
            source[f].resize(n);
        }
        std::vector<Matrix4c> h_start(n);
        for (std::size_t i = 0; i < n; ++i) {
            h_start[i] = build_hamiltonian(to_amplitudes(fields_[i]), scheme_);
            const Matrix4c predicted = rk4_step(rho_[i], h_start[i], h_start[i], h_start[i], scheme_, dt_);
            const FieldArray s0 = sources(rho_[i], eta_);
            const FieldArray s1 = sources(predicted, eta_);
            for (int f = 0; f < 4; ++f) {
                envelope[f][i] = fields_[i][f];
                source[f][i] = 0.5 * (s0[f] + s1[f]);
            }
        }
        const FieldArray b = boundary_(t_ + dt_);
        std::vector<FieldArray> next(n);
        for (int f = 0; f < 4; ++f) {
            if (clamped_[f]) {
                for (auto& v : next) v[f] = 0.0;
                continue;
            }
            const std::vector<cplx> updated =
                lax_wendroff_step(envelope[f], source[f], b[f], courant_, dz_);
            for (std::size_t i = 0; i < n; ++i) next[i][f] = updated[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            FieldArray mid;
            for (int f = 0; f < 4; ++f) mid[f] = 0.5 * (fields_[i][f] + next[i][f]);
            const Matrix4c h_mid = build_hamiltonian(to_amplitudes(mid), scheme_);
            const Matrix4c h_end = build_hamiltonian(to_amplitudes(next[i]), scheme_);
            rho_[i] = rk4_step(rho_[i], h_start[i], h_mid, h_end, scheme_, dt_);
            if (!rho_[i].allFinite() || std::abs(rho_[i].trace() - 1.0) > 1e-6)
                fail(ErrorCode::StepUnstable, "trace drift at node " + std::to_string(i));
        }
        fields_ = std::move(next);
        t_ += dt_;
    }

private:
    LevelScheme scheme_;
    std::array<double, 4> eta_;
    int nz_;
    double dz_;
    double courant_;
    double dt_;
    std::array<bool, 4> clamped_;
    BoundaryFn boundary_;
    std::vector<Matrix4c> rho_;
    std::vector<FieldArray> fields_;
    double t_ = 0.0;
};

double relative_change(cplx now, cplx before, double floor) {
    const double scale = std::max({std::abs(now), std::abs(before), floor});
    if (scale == 0.0) return 0.0;
    return std::abs(now - before) / scale;
}

void check_step_bound(double dt, const FieldAmplitudes& peak_fields, const LevelScheme& scheme) {
    const double bound = max_stable_step(peak_fields, scheme);
    if (dt > bound * (1.0 + 1e-12)) {
        fail(ErrorCode::InvalidArgument, "time step " + std::to_string(dt) +
                                             " exceeds atomic stability bound " +
                                             std::to_string(bound));
    }
}

std::vector<double> node_positions(const MediumSpec& medium, int nz) {
    std::vector<double> z(nz + 1);
    for (int i = 0; i <= nz; ++i) z[i] = medium.length * i / nz;
    return z;
}

// Collects entry/exit series, per-node probe peaks and lab-frame snapshots.
class Recorder {
public:
    Recorder(FieldRecord& record, const MediumSpec& medium, int nz,
             const PropagateOptions& options, double sample_interval_s)
        : rec_(record),
          nz_(nz),
          transit_(medium.transit_time()),
          gamma_(medium.gamma),
          interval_(sample_interval_s),
          n_(static_cast<std::size_t>(nz) + 1),
          last_(n_, 0.0),
          best_(n_, -1.0),
          best_prev_(n_, 0.0),
          best_next_(n_, 0.0),
          best_time_(n_, std::numeric_limits<double>::quiet_NaN()),
          state_(n_, PeakState::None) {
        if (options.record_snapshots) {
            for (double t : options.snapshot_times) {
                Snapshot s;
                s.time = t;
                for (auto& f : s.fields) f.assign(n_, cplx{});
                rec_.snapshots.push_back(std::move(s));
            }
        }
    }

    // node_time(i) is the lab-frame time (s) of the sample at node i.
    void sample(const std::vector<FieldArray>& fields, const std::function<double(int)>& node_time,
                bool lab_frame) {
        const double t0 = node_time(0);
        const double tn = node_time(nz_);
        rec_.entry_time.push_back(t0 * gamma_);
        rec_.exit_time.push_back(tn * gamma_ - transit_);
        for (int f = 0; f < 4; ++f) {
            rec_.entry[f].push_back(fields[0][f]);
            rec_.exit[f].push_back(fields[nz_][f]);
        }
        for (std::size_t i = 0; i < n_; ++i) {
            rec_.max_abs_probe = std::max(rec_.max_abs_probe, std::abs(fields[i][idx(Field::Probe41)]));
            rec_.max_abs_generated =
                std::max(rec_.max_abs_generated, std::abs(fields[i][idx(Field::Generated32)]));
            track_peak(i, std::norm(fields[i][idx(Field::Probe41)]), node_time(static_cast<int>(i)));
        }
        if (!rec_.snapshots.empty() && have_prev_) {
            for (Snapshot& s : rec_.snapshots) {
                for (std::size_t i = 0; i < n_; ++i) {
                    const double tp = lab_frame ? prev_t0_ : prev_t0_ + (node_time(static_cast<int>(i)) - t0);
                    const double tc = node_time(static_cast<int>(i));
                    if (s.time >= tp && s.time < tc) {
                        const double w = (s.time - tp) / (tc - tp);
                        for (int f = 0; f < 4; ++f)
                            s.fields[f][i] = (1.0 - w) * prev_[i][f] + w * fields[i][f];
                    }
                }
            }
        }
        if (!rec_.snapshots.empty()) {
            prev_ = fields;
            prev_t0_ = t0;
            have_prev_ = true;
        }
    }

    void finish() {
        rec_.probe_peak_time.assign(n_, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < n_; ++i) {
            if (state_[i] != PeakState::Bracketed) continue;
            const double p = best_prev_[i];
            const double b = best_[i];
            const double nx = best_next_[i];
            const double denom = p - 2.0 * b + nx;
            const double offset = denom != 0.0 ? 0.5 * (p - nx) / denom : 0.0;
            rec_.probe_peak_time[i] = best_time_[i] + offset * interval_;
        }
    }

private:
    enum class PeakState { None, AwaitNext, Bracketed, AtStart };

    void track_peak(std::size_t i, double value, double t) {
        if (value > best_[i]) {
            const bool first = best_[i] < 0.0;
            best_[i] = value;
            best_prev_[i] = last_[i];
            best_time_[i] = t;
            state_[i] = first ? PeakState::AtStart : PeakState::AwaitNext;
        } else if (state_[i] == PeakState::AwaitNext) {
            best_next_[i] = value;
            state_[i] = PeakState::Bracketed;
        }
        last_[i] = value;
    }

    FieldRecord& rec_;
    int nz_;
    double transit_;
    double gamma_;
    double interval_;
    std::size_t n_;
    std::vector<double> last_;
    std::vector<double> best_;
    std::vector<double> best_prev_;
    std::vector<double> best_next_;
    std::vector<double> best_time_;
    std::vector<PeakState> state_;
    std::vector<FieldArray> prev_;
    double prev_t0_ = 0.0;
    bool have_prev_ = false;
};

}  // namespace

cplx ProbeWaveform::at(double tau) const {
    if (kind == Kind::ContinuousWave) return amplitude * ramp_shape(tau, ramp);
    const double s = sigma();
    const double x = (tau - peak_time()) / s;
    return amplitude * std::exp(-0.5 * x * x);
}

double ProbeWaveform::sigma() const {
    if (!(bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "probe bandwidth must be positive");
    return 2.0 * std::sqrt(std::log(2.0)) / bandwidth;
}

double ProbeWaveform::peak_time() const { return center >= 0.0 ? center : 6.0 * sigma(); }

PreparedMedium prepare_medium(const MediumSpec& medium, const FieldAmplitudes& controls,
                              const Grid& grid, const PrepareOptions& options) {
    medium.validate();
    grid.validate(medium);
    if (!controls.finite()) fail(ErrorCode::InvalidArgument, "control amplitudes must be finite");

    FieldAmplitudes entry = controls;
    entry.omega41 = 0.0;
    entry.omega32 = 0.0;
    const double dt = grid.dt;
    check_step_bound(dt, entry, medium.scheme);

    const int nz = grid.nz;
    const AtomState start = AtomState::ground_mixture(options.initial_ground_weight);
    std::vector<Matrix4c> rho(static_cast<std::size_t>(nz) + 1, start.rho());

    const double ramp = options.ramp;
    BoundaryFn boundary = [entry, ramp](double tau) {
        const double s = ramp_shape(tau, ramp);
        return FieldArray{s * entry.omega31, s * entry.omega42, cplx{}, cplx{}};
    };
    RetardedSolver solver(medium, nz, dt, medium.scheme, {false, false, true, true},
                          std::move(boundary), std::move(rho));

    const long window_steps = std::max(1L, std::lround(options.check_window / dt));
    const long ramp_steps = std::lround(std::ceil(ramp / dt));
    FieldArray reference = solver.fields()[nz];
    long step = 0;
    PreparedMedium out;
    out.entry_controls = entry;
    while (true) {
        solver.step();
        ++step;
        if (step >= ramp_steps && (step - ramp_steps) % window_steps == 0) {
            const FieldArray now = solver.fields()[nz];
            const double change = std::max(relative_change(now[0], reference[0], 0.0),
                                           relative_change(now[1], reference[1], 0.0));
            if (step > ramp_steps && change < options.tolerance) {
                out.converged = true;
                break;
            }
            reference = now;
        }
        if (solver.tau() > options.max_duration) {
            fail(ErrorCode::NoConvergence, "control fields did not settle within " +
                                               std::to_string(options.max_duration) + "/gamma");
        }
    }
    out.relax_time = solver.tau();
    out.atoms.reserve(solver.rho().size());
    for (const Matrix4c& r : solver.rho()) out.atoms.emplace_back(r);
    for (const FieldArray& f : solver.fields()) {
        out.control31.push_back(f[0]);
        out.control42.push_back(f[1]);
    }
    return out;
}

FieldRecord propagate(const MediumSpec& medium, const Grid& grid, const PreparedMedium& prepared,
                      const ProbeWaveform& probe, const PropagateOptions& options) {
    medium.validate();
    grid.validate(medium);
    const int nz = grid.nz;
    if (prepared.atoms.size() != static_cast<std::size_t>(nz) + 1)
        fail(ErrorCode::InvalidArgument, "prepared medium does not match the grid");

    LevelScheme scheme = medium.scheme;
    scheme.delta41 = probe.detuning;

    FieldAmplitudes peak = prepared.entry_controls;
    peak.omega41 = probe.amplitude;
    const double dt = grid.step(medium);
    check_step_bound(dt, peak, scheme);

    const FieldAmplitudes controls = prepared.entry_controls;
    BoundaryFn boundary = [controls, probe](double tau) {
        return FieldArray{controls.omega31, controls.omega42, probe.at(tau), cplx{}};
    };
    const std::array<bool, 4> clamped{false, false, false, options.suppress_4wm};

    std::vector<Matrix4c> rho;
    rho.reserve(prepared.atoms.size());
    for (const AtomState& a : prepared.atoms) rho.push_back(a.rho());

    FieldRecord rec;
    rec.frame = grid.frame;
    rec.gamma = medium.gamma;
    rec.length = medium.length;
    rec.z = node_positions(medium, nz);

    const bool cw = probe.kind == ProbeWaveform::Kind::ContinuousWave;
    const double gamma = medium.gamma;
    const double dz_over_c = grid.dz(medium) / kSpeedOfLight;
    Recorder recorder(rec, medium, nz, options, dt / gamma);

    auto run = [&](auto& solver, auto node_time_of) {
        const long window_steps = std::max(1L, std::lround(options.check_window / dt));
        const long ramp_steps = cw ? std::lround(std::ceil(probe.ramp / dt)) : 0;
        const long total_steps = std::lround(std::ceil(grid.duration / dt));
        FieldArray reference = solver.fields()[nz];
        long step = 0;
        while (true) {
            const double tau = solver.tau();
            recorder.sample(solver.fields(), [&](int i) { return node_time_of(tau, i); },
                            grid.frame == Frame::Lab);
            if (options.atom_history_stride > 0 && step % options.atom_history_stride == 0) {
                std::vector<AtomState> snap;
                for (const Matrix4c& r : solver.rho()) snap.emplace_back(r);
                rec.atom_history.push_back(std::move(snap));
            }
            if (cw) {
                if (step >= ramp_steps && (step - ramp_steps) % window_steps == 0) {
                    const FieldArray now = solver.fields()[nz];
                    double change = 0.0;
                    for (int f = 0; f < 4; ++f)
                        change = std::max(change, relative_change(now[f], reference[f], probe.amplitude));
                    if (step > ramp_steps && change < options.steady_tolerance) {
                        rec.steady = true;
                        rec.settle_time = tau;
                        rec.entry_steady = solver.fields()[0];
                        rec.exit_steady = now;
                        break;
                    }
                    reference = now;
                }
                if (tau > options.max_duration) {
                    fail(ErrorCode::NoConvergence,
                         "cw probe did not reach a steady state within " +
                             std::to_string(options.max_duration) + "/gamma");
                }
            } else if (step >= total_steps) {
                break;
            }
            solver.step();
            ++step;
        }
        for (int f = 0; f < 4; ++f) {
            rec.final_profile[f].resize(solver.fields().size());
            for (std::size_t i = 0; i < solver.fields().size(); ++i)
                rec.final_profile[f][i] = solver.fields()[i][f];
        }
        for (const Matrix4c& r : solver.rho()) rec.final_atoms.emplace_back(r);
    };

    if (grid.frame == Frame::Retarded) {
        RetardedSolver solver(medium, nz, dt, scheme, clamped, std::move(boundary), std::move(rho));
        run(solver, [&](double tau, int i) { return tau / gamma + i * dz_over_c; });
    } else {
        std::vector<FieldArray> initial(static_cast<std::size_t>(nz) + 1);
        for (int i = 0; i <= nz; ++i) {
            initial[i][0] = prepared.control31.empty() ? cplx{} : prepared.control31[i];
            initial[i][1] = prepared.control42.empty() ? cplx{} : prepared.control42[i];
        }
        LabSolver solver(medium, nz, grid.courant, scheme, clamped, std::move(boundary),
                         std::move(rho), std::move(initial));
        run(solver, [&](double t, int) { return t / gamma; });
    }
    recorder.finish();
    return rec;
}

namespace {

// One population equation is redundant (the RHS is traceless), so it is
// swapped for the trace condition and the system solved by LU. Near a
// degenerate null space the SVD path decides.
Matrix4c local_steady_state(const FieldAmplitudes& fields, const LevelScheme& scheme) {
    Liouvillian l = build_liouvillian(fields, scheme);
    l.row(0).setZero();
    for (int d = 0; d < 4; ++d) l(0, 5 * d) = 1.0;
    Eigen::PartialPivLU<Liouvillian> lu(l);
    if (lu.rcond() > 1e-4) {
        Eigen::Matrix<cplx, 16, 1> rhs = Eigen::Matrix<cplx, 16, 1>::Zero();
        rhs(0) = 1.0;
        const Eigen::Matrix<cplx, 16, 1> x = lu.solve(rhs);
        Matrix4c rho;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) rho(i, j) = x(4 * i + j);
        return 0.5 * (rho + rho.adjoint());
    }
    return steady_state(fields, scheme).rho();
}

}  // namespace

StationaryProfile propagate_stationary(const MediumSpec& medium, int nz,
                                       const FieldAmplitudes& entry_fields,
                                       double probe_detuning, bool suppress_4wm) {
    medium.validate();
    if (nz < 1) fail(ErrorCode::InvalidArgument, "need at least one cell");
    LevelScheme scheme = medium.scheme;
    scheme.delta41 = probe_detuning;
    const auto eta = medium.couplings().as_array();
    const double dz = medium.length / nz;

    auto derivative = [&](const FieldArray& y) {
        FieldArray d = sources(local_steady_state(to_amplitudes(y), scheme), eta);
        if (suppress_4wm) d[idx(Field::Generated32)] = 0.0;
        return d;
    };
    auto axpy = [](const FieldArray& y, double a, const FieldArray& k) {
        FieldArray out;
        for (int f = 0; f < 4; ++f) out[f] = y[f] + a * k[f];
        return out;
    };

    StationaryProfile out;
    out.z = node_positions(medium, nz);
    FieldArray y = to_array(entry_fields);
    if (suppress_4wm) y[idx(Field::Generated32)] = 0.0;
    out.fields.push_back(y);
    for (int i = 0; i < nz; ++i) {
        const FieldArray k1 = derivative(y);
        const FieldArray k2 = derivative(axpy(y, 0.5 * dz, k1));
        const FieldArray k3 = derivative(axpy(y, 0.5 * dz, k2));
        const FieldArray k4 = derivative(axpy(y, dz, k3));
        for (int f = 0; f < 4; ++f) y[f] += dz / 6.0 * (k1[f] + 2.0 * k2[f] + 2.0 * k3[f] + k4[f]);
        out.fields.push_back(y);
    }
    return out;
}

}  // namespace wlc
