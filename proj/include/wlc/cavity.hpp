#pragma once

// Fabry-Perot response of a cavity holding a dispersive medium, built from
// the single-pass susceptibility. Detunings here are angular (rad/s) offsets
// from the cavity resonance omega0.

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "wlc/measurement.hpp"

namespace wlc {

struct CavitySpec {
    double length = 0.595;  // m
    double r = 0.0;         // round-trip amplitude factor
    double omega0 = 0.0;    // rad/s

    static CavitySpec from_finesse(double length, double finesse, double omega0);
    double finesse() const;
    void validate() const;
};

double finesse_from_r(double r);
double r_from_finesse(double finesse);

// 2 pi c / (2 L F)
double empty_bandwidth(const CavitySpec& cavity);

// Susceptibility of the intracavity medium as a function of angular detuning.
class MediumResponse {
public:
    virtual ~MediumResponse() = default;
    virtual cplx chi(double delta) const = 0;
    virtual double wave_number() const = 0;
    virtual double min_delta() const { return -std::numeric_limits<double>::infinity(); }
    virtual double max_delta() const { return std::numeric_limits<double>::infinity(); }
};

// Natural cubic spline through a swept curve (real and imaginary parts).
class SampledResponse final : public MediumResponse {
public:
    explicit SampledResponse(const SusceptibilityCurve& curve);
    ~SampledResponse() override;
    SampledResponse(const SampledResponse&) = delete;
    SampledResponse& operator=(const SampledResponse&) = delete;

    cplx chi(double delta) const override;
    double wave_number() const override { return k_; }
    double min_delta() const override;
    double max_delta() const override;

private:
    struct Splines;
    std::unique_ptr<Splines> s_;
    double k_;
    double gamma_;
};

// Lossless medium with n = 1 + (n_g / omega0) Delta + n3 Delta^3 exactly.
class PolynomialResponse final : public MediumResponse {
public:
    PolynomialResponse(double group_index, double n3, double omega0);
    cplx chi(double delta) const override;
    double wave_number() const override;

private:
    double ng_, n3_, omega0_;
};

struct RoundTripOptions {
    // Include the medium's chi'' in the round-trip amplitude.
    bool include_amplitude = true;
    // Measure the medium phase relative to its value at Delta = 0, i.e. the
    // cavity is trimmed (sub-wavelength) to stay resonant at omega0.
    bool lock_resonance = true;
};

struct RoundTrip {
    double rho = 0.0;  // round-trip amplitude
    double phi = 0.0;  // round-trip phase, rad
};

// phi = 2 L Delta / c + k l chi'(Delta), rho = r exp(-k l chi''(Delta)).
// `medium` may be null (empty cavity). Throws OutOfRange, AboveLasingThreshold.
RoundTrip roundtrip_response(double delta, const CavitySpec& cavity, const MediumResponse* medium,
                             double medium_length, const RoundTripOptions& options = {});

// I / I0 = 1 / ((1 - rho)^2 + 4 rho sin^2(phi / 2)).
double buildup(double delta, const CavitySpec& cavity, const MediumResponse* medium,
               double medium_length, const RoundTripOptions& options = {});

struct ResonanceProfile {
    std::vector<double> delta;    // rad/s
    std::vector<double> buildup;  // I / I0
    double i_max = 0.0;
    // Exact buildup at any detuning, when the profile came from a cavity model.
    std::function<double(double)> evaluate;
};

ResonanceProfile buildup_profile(const CavitySpec& cavity, const MediumResponse* medium,
                                 double medium_length, const std::vector<double>& deltas,
                                 const RoundTripOptions& options = {});

// Full width at half maximum around the global maximum. Samples bracket the
// crossings; the evaluator (or linear interpolation) refines them by bisection.
// Throws NoHalfCrossing.
double fwhm(const ResonanceProfile& profile);

// Half-maximum width of a peak at `center` found by scanning outward with
// `step` up to `max_offset`, then bisecting. Throws NoHalfCrossing.
double scan_fwhm(const std::function<double(double)>& f, double center, double step,
                 double max_offset);

// L / l = -n_g. Throws InsufficientGroupIndex when n_g > -1.
double wlc_condition(double group_index);

// (4 pi c / (l omega0 n3 F))^(1/3). Throws NonpositiveCubicTerm.
double wlc_bandwidth_analytic(const CavitySpec& cavity, double medium_length, double n3);

struct Flatness {
    double quadratic = 0.0;   // c2 of I/I(0) = c0 + c2 x^2 + c4 x^4, x = Delta / half_window
    double std_error = 0.0;
    double half_window = 0.0; // rad/s
};
Flatness quadratic_flatness(const std::function<double(double)>& f, double half_window,
                            int samples = 41);

struct WlcGeometry {
    double medium_length = 0.0;  // l*
    double group_index = 0.0;    // n_g at l*
    double residual = 0.0;       // |n_g l / L + 1|
    int iterations = 0;
};

struct WlcSolveOptions {
    double tolerance = 1e-3;
    int max_iterations = 20;
};

// Fixed point l <- L / |n_g(l)|, with n_g re-evaluated at every length.
// Throws InsufficientGroupIndex, NoConvergence.
WlcGeometry solve_wlc_geometry(const std::function<double(double)>& group_index_at,
                               double cavity_length, double initial_length,
                               const WlcSolveOptions& options = {});

struct ScalingSample {
    double finesse = 0.0;
    double gamma0 = 0.0;  // rad/s
    double gamma1 = 0.0;  // rad/s
    double ratio = 0.0;   // gamma1 / gamma0
};

struct ScalingResult {
    std::vector<ScalingSample> samples;
    double slope = 0.0;  // d log(ratio) / d log(gamma0 / gamma)
};

// One cavity per finesse at fixed L; gamma1 from the numeric width of the
// buildup with the medium. `gamma` is the reference rate for the abscissa.
ScalingResult enhancement_scaling(double cavity_length, double omega0,
                                  const std::vector<double>& finesses,
                                  const MediumResponse& medium, double medium_length,
                                  double gamma, const RoundTripOptions& options = {});

// Least-squares slope of log(y) against log(x); needs at least 4 points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wlc
