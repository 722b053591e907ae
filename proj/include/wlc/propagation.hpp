#pragma once

// One-dimensional slowly-varying-envelope propagation of the four fields
// through the atomic medium:
//
//   (d/dz + (1/c) d/dt) Omega_jk = i eta_jk rho_jk
//
// Two integrators share this equation. The retarded-frame integrator uses
// tau = t - z/c, where the equation reduces to d/dz Omega = i eta rho at fixed
// tau; it decouples the time step from the cell size and is the default. The
// lab-frame integrator advances envelopes with Lax-Wendroff at a Courant
// number C = c dt / dz <= 1 (exact transport at C = 1).

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wlc/atomic.hpp"

namespace wlc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Index of each envelope in the per-field arrays below.
enum class Field : int { Control31 = 0, Control42 = 1, Probe41 = 2, Generated32 = 3 };
inline constexpr std::array<Field, 4> kAllFields = {Field::Control31, Field::Control42,
                                                    Field::Probe41, Field::Generated32};
inline constexpr int idx(Field f) { return static_cast<int>(f); }
const char* field_name(Field f);

using FieldArray = std::array<cplx, 4>;
FieldArray to_array(const FieldAmplitudes& f);
FieldAmplitudes to_amplitudes(const FieldArray& a);

struct Couplings {
    double eta31 = 0.0;  // gamma / m
    double eta42 = 0.0;
    double eta41 = 0.0;
    double eta32 = 0.0;

    std::array<double, 4> as_array() const { return {eta31, eta42, eta41, eta32}; }
};

struct MediumSpec {
    double length = 0.3;            // m
    double density = 6.6e15;        // m^-3
    double wavelength = 780e-9;     // m
    double gamma = 2.0 * kPi * 6e6; // reference rate, rad/s
    double coupling_calibration = 1.0;
    LevelScheme scheme;
    std::optional<Couplings> coupling_override;

    void validate() const;

    // eta_jk = calibration * 3 N lambda^2 gamma_jk / (8 pi), unless overridden.
    Couplings couplings() const;
    double wave_number() const { return 2.0 * kPi / wavelength; }
    double omega0() const { return kSpeedOfLight * wave_number(); }
    // Vacuum transit time in units of 1/gamma.
    double transit_time() const { return length / kSpeedOfLight * gamma; }
};

enum class Frame { Retarded, Lab };

struct Grid {
    int nz = 128;
    double dt = 0.005;       // 1/gamma, retarded frame
    double courant = 1.0;    // lab frame; dt follows from C dz / c
    double duration = 60.0;  // 1/gamma, pulse runs
    Frame frame = Frame::Retarded;

    double dz(const MediumSpec& m) const { return m.length / nz; }
    // Time step in units of 1/gamma for the selected frame.
    double step(const MediumSpec& m) const;
    // c dt / dz for the effective step.
    double courant_number(const MediumSpec& m) const;
    void validate(const MediumSpec& m) const;
};

// One Lax-Wendroff step of (d/dz + (1/c) d/dt) u = s on nodes 0..Nz.
// `source` should be time-centred over the step for second-order accuracy.
// Node 0 takes `boundary`; the exit node uses first-order upwinding (open
// boundary). At C = 1 with zero source the update is an exact one-cell shift.
// Throws CflViolation when C is not in (0, 1].
std::vector<cplx> lax_wendroff_step(std::span<const cplx> envelope,
                                    std::span<const cplx> source, cplx boundary,
                                    double courant, double dz);

// i * eta_jk * rho_jk for (3,1), (4,2), (4,1), (3,2), in gamma / m.
FieldAmplitudes source_terms(const AtomState& state, const Couplings& couplings);

struct PrepareOptions {
    double initial_ground_weight = 0.5;  // population of |1> in the starting mixture
    double ramp = 20.0;                  // 1/gamma
    double check_window = 10.0;          // 1/gamma
    double tolerance = 1e-6;             // relative change of exit controls per window
    double max_duration = 1000.0;        // 1/gamma
};

struct PreparedMedium {
    std::vector<AtomState> atoms;    // one per node
    std::vector<cplx> control31;     // relaxed profiles over z
    std::vector<cplx> control42;
    FieldAmplitudes entry_controls;
    double relax_time = 0.0;         // 1/gamma
    bool converged = false;
};

// Controls-only propagation (probe and generated fields clamped to zero) from
// a uniform ground mixture until the exit-face controls settle.
// Throws NoConvergence if they do not within options.max_duration.
PreparedMedium prepare_medium(const MediumSpec& medium, const FieldAmplitudes& controls,
                              const Grid& grid, const PrepareOptions& options = {});

struct ProbeWaveform {
    enum class Kind { ContinuousWave, Gaussian };
    Kind kind = Kind::ContinuousWave;
    double amplitude = 0.1;  // gamma
    double detuning = 0.0;   // gamma; overrides the scheme's delta41
    // Gaussian: FWHM of the intensity spectrum in units of gamma.
    double bandwidth = 0.5;
    // Gaussian: entry peak time; cw: length of the tanh switch-on. 1/gamma.
    double center = -1.0;    // <0 selects 6 standard deviations
    double ramp = 20.0;

    // Envelope at the medium entry, retarded time in 1/gamma.
    cplx at(double tau) const;
    double sigma() const;        // Gaussian standard deviation of |E|, 1/gamma
    double peak_time() const;    // Gaussian entry peak, 1/gamma
};

struct PropagateOptions {
    bool suppress_4wm = false;
    bool record_snapshots = false;
    std::vector<double> snapshot_times;  // lab-frame times in seconds since the run start
    double check_window = 10.0;          // cw steady-state test window, 1/gamma
    double steady_tolerance = 1e-6;
    double max_duration = 1000.0;        // cw cap, 1/gamma
    int atom_history_stride = 0;         // record atoms every N steps (0: final only)
};

struct Snapshot {
    double time = 0.0;  // lab frame, seconds
    std::array<std::vector<cplx>, 4> fields;
};

struct FieldRecord {
    Frame frame = Frame::Retarded;
    double gamma = 0.0;     // rad/s
    double length = 0.0;    // m
    std::vector<double> z;  // m

    // Entry and exit time series against retarded time (1/gamma). A vacuum
    // run has identical entry and exit series.
    std::vector<double> entry_time;
    std::vector<double> exit_time;
    std::array<std::vector<cplx>, 4> entry;
    std::array<std::vector<cplx>, 4> exit;

    std::array<std::vector<cplx>, 4> final_profile;
    std::vector<AtomState> final_atoms;
    std::vector<std::vector<AtomState>> atom_history;

    // Lab-frame time (s) of the probe intensity maximum at each node.
    std::vector<double> probe_peak_time;
    std::vector<Snapshot> snapshots;

    double max_abs_probe = 0.0;
    double max_abs_generated = 0.0;

    bool steady = false;
    FieldArray entry_steady{};
    FieldArray exit_steady{};
    double settle_time = 0.0;  // 1/gamma
};

// Coupled propagation of all four fields through the prepared medium. For cw
// probes the run stops once the exit face is steady (NoConvergence if it never
// is); Gaussian runs last grid.duration.
FieldRecord propagate(const MediumSpec& medium, const Grid& grid, const PreparedMedium& prepared,
                      const ProbeWaveform& probe, const PropagateOptions& options = {});

// Stationary cw solution: every node sits in the steady state of its local
// fields and d/dz Omega = i eta rho_ss(Omega) is integrated with RK4 in z.
// Serves as an independent check of the time-domain cw result.
struct StationaryProfile {
    std::vector<double> z;
    std::vector<FieldArray> fields;
};

StationaryProfile propagate_stationary(const MediumSpec& medium, int nz,
                                       const FieldAmplitudes& entry_fields,
                                       double probe_detuning, bool suppress_4wm);

}  // namespace wlc
