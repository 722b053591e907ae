#pragma once

// Observables extracted from propagation runs: pulse advancement and group
// index, effective probe susceptibility from cw entry/exit amplitudes, and
// the odd-cubic dispersion fit n(Delta) = 1 + (n_g / omega0) Delta + n3 Delta^3.

#include <optional>
#include <string>
#include <vector>

#include "wlc/errors.hpp"
#include "wlc/propagation.hpp"

namespace wlc {

struct SusceptibilityCurve {
    std::vector<double> delta;   // probe detuning, units of gamma; strictly increasing
    std::vector<double> chi_re;  // chi'
    std::vector<double> chi_im;  // chi''
    double length = 0.0;         // m
    double wave_number = 0.0;    // 1/m
    double gamma = 0.0;          // rad/s
    bool suppressed_4wm = false;

    std::size_t size() const { return delta.size(); }
    void validate() const;
};

struct DispersionFit {
    double group_index = 0.0;  // n_g
    double n3 = 0.0;           // s^3
    double window = 0.0;       // half-width, units of gamma
    double residual = 0.0;     // RMS residual of n - 1
    int samples = 0;
};

struct ExtractedSusceptibility {
    double chi_re = 0.0;
    double chi_im = 0.0;
    double phase = 0.0;  // unwrapped arg(exit / entry)
};

// Inverts exit = entry * exp(-k l chi''/2) * exp(i k l chi'/2). The phase is
// taken on the branch closest to `previous_phase` when given.
ExtractedSusceptibility extract_susceptibility(cplx entry, cplx exit, double wave_number,
                                              double length,
                                              std::optional<double> previous_phase = std::nullopt);

// Advancement (s) of the exit-face probe intensity peak relative to vacuum
// transit. Positive means the pulse leaves early. Throws NoPeak.
double peak_advancement(const FieldRecord& record);

// n_g = -c T_a / l.
double group_index(double advancement, double length);

// Lab-frame motion of the probe peak inside the medium.
struct PeakTrajectory {
    double entry_time = 0.0;  // s, peak at z = 0
    double exit_time = 0.0;   // s, peak at z = l
    double slope = 0.0;       // ds/dm of peak time against z (negative: runs backwards)
    double monotone_fraction = 0.0;  // share of adjacent node pairs with decreasing peak time
};
PeakTrajectory peak_trajectory(const FieldRecord& record);

enum class SweepMethod { TimeDomain, Stationary };

struct SweepOptions {
    SweepMethod method = SweepMethod::TimeDomain;
    double probe_amplitude = 0.1;  // gamma
    int jobs = 1;
    PropagateOptions propagate;
    PrepareOptions prepare;
};

struct SweepFailure {
    double delta = 0.0;
    ErrorCode code = ErrorCode::NoConvergence;
    std::string message;
};

struct SweepResult {
    SusceptibilityCurve curve;  // successful points only
    std::vector<SweepFailure> failures;
    std::optional<PreparedMedium> prepared;  // time-domain sweeps only
};

// One cw run per detuning, then sequential phase continuation in detuning
// order. `prepared` may be passed to reuse a relaxed medium (the controls-only
// state does not depend on the probe detuning).
SweepResult sweep_susceptibility(const MediumSpec& medium, const Grid& grid,
                                 const FieldAmplitudes& controls,
                                 const std::vector<double>& deltas, bool suppress_4wm,
                                 const SweepOptions& options = {},
                                 const PreparedMedium* prepared = nullptr);

struct FitOptions {
    int min_samples = 7;
    // Largest RMS residual accepted, relative to the RMS of n - 1 in the window.
    double max_relative_residual = 0.2;
};

// Least squares of a*Delta + b*Delta^3 to n - 1 = chi'/2 over |Delta| <= window
// (window in units of gamma). Throws IllConditionedFit.
DispersionFit fit_dispersion(const SusceptibilityCurve& curve, double omega0, double window,
                             const FitOptions& options = {});

// Susceptibility obtained by averaging the single-atom linear response over
// the local control amplitudes of a prepared medium (trapezoidal z average).
cplx averaged_single_atom_susceptibility(const MediumSpec& medium,
                                         const PreparedMedium& prepared, double delta);

// Group index from an odd-cubic fit to a sweep of `points` detunings over
// [-window, window] (units of gamma).
DispersionFit resonant_dispersion(const MediumSpec& medium, const Grid& grid,
                                  const FieldAmplitudes& controls, double window, int points,
                                  bool suppress_4wm, const SweepOptions& options = {},
                                  const FitOptions& fit = {});

struct Calibration {
    double factor = 0.0;       // coupling calibration
    double group_index = 0.0;  // fitted n_g at that factor
    int iterations = 0;
};

// Secant search on MediumSpec::coupling_calibration until the resonant fitted
// group index (4WM on) equals `target` within `tolerance`. Throws NoConvergence.
Calibration calibrate_coupling(MediumSpec medium, const Grid& grid, const FieldAmplitudes& controls,
                               double target, double window, int points,
                               const SweepOptions& options = {}, double tolerance = 1e-4,
                               int max_iterations = 30);

// Uniformly spaced detunings, inclusive of both ends.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace wlc
