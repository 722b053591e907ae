#include "wlc/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

namespace wlc {

double finesse_from_r(double r) {
    if (!(r > 0.0 && r < 1.0)) fail(ErrorCode::InvalidArgument, "mirror factor r must lie in (0, 1)");
    return kPi * std::sqrt(r) / (1.0 - r);
}

double r_from_finesse(double finesse) {
    if (!(finesse > 0.0) || !std::isfinite(finesse))
        fail(ErrorCode::InvalidArgument, "finesse must be positive");
    // F s^2 + pi s - F = 0 with s = sqrt(r)
    const double s = 2.0 * finesse / (kPi + std::sqrt(kPi * kPi + 4.0 * finesse * finesse));
    return s * s;
}

CavitySpec CavitySpec::from_finesse(double length, double finesse, double omega0) {
    CavitySpec c;
    c.length = length;
    c.r = r_from_finesse(finesse);
    c.omega0 = omega0;
    c.validate();
    return c;
}

double CavitySpec::finesse() const { return finesse_from_r(r); }

void CavitySpec::validate() const {
    if (!(length > 0.0) || !std::isfinite(length))
        fail(ErrorCode::InvalidArgument, "cavity length must be positive");
    if (!(r > 0.0 && r < 1.0)) fail(ErrorCode::InvalidArgument, "mirror factor r must lie in (0, 1)");
    if (!(omega0 > 0.0)) fail(ErrorCode::InvalidArgument, "resonance frequency must be positive");
}

double empty_bandwidth(const CavitySpec& cavity) {
    cavity.validate();
    return 2.0 * kPi * kSpeedOfLight / (2.0 * cavity.length * cavity.finesse());
}

// ---------------------------------------------------------------------------

struct SampledResponse::Splines {
    gsl_spline* re = nullptr;
    gsl_spline* im = nullptr;
    double lo = 0.0;
    double hi = 0.0;
    ~Splines() {
        if (re) gsl_spline_free(re);
        if (im) gsl_spline_free(im);
    }
};

SampledResponse::SampledResponse(const SusceptibilityCurve& curve)
    : s_(std::make_unique<Splines>()), k_(curve.wave_number), gamma_(curve.gamma) {
    curve.validate();
    if (curve.size() < 3) fail(ErrorCode::InvalidArgument, "spline needs at least 3 samples");
    if (!(k_ > 0.0) || !(gamma_ > 0.0))
        fail(ErrorCode::InvalidArgument, "curve lacks wave number or reference rate");
    gsl_set_error_handler_off();
    const std::size_t n = curve.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = curve.delta[i] * gamma_;
    s_->re = gsl_spline_alloc(gsl_interp_cspline, n);
    s_->im = gsl_spline_alloc(gsl_interp_cspline, n);
    if (!s_->re || !s_->im) fail(ErrorCode::InvalidArgument, "spline allocation failed");
    if (gsl_spline_init(s_->re, x.data(), curve.chi_re.data(), n) != GSL_SUCCESS ||
        gsl_spline_init(s_->im, x.data(), curve.chi_im.data(), n) != GSL_SUCCESS)
        fail(ErrorCode::InvalidArgument, "spline initialisation failed");
    s_->lo = x.front();
    s_->hi = x.back();
}

SampledResponse::~SampledResponse() = default;

double SampledResponse::min_delta() const { return s_->lo; }
double SampledResponse::max_delta() const { return s_->hi; }

cplx SampledResponse::chi(double delta) const {
    if (!(delta >= s_->lo && delta <= s_->hi))
        fail(ErrorCode::OutOfRange, "detuning " + std::to_string(delta / gamma_) +
                                        " gamma outside the swept curve");
    // A null accelerator keeps evaluation free of shared state.
    return {gsl_spline_eval(s_->re, delta, nullptr), gsl_spline_eval(s_->im, delta, nullptr)};
}

PolynomialResponse::PolynomialResponse(double group_index, double n3, double omega0)
    : ng_(group_index), n3_(n3), omega0_(omega0) {
    if (!(omega0 > 0.0)) fail(ErrorCode::InvalidArgument, "resonance frequency must be positive");
}

cplx PolynomialResponse::chi(double delta) const {
    return 2.0 * (ng_ / omega0_ * delta + n3_ * delta * delta * delta);
}

double PolynomialResponse::wave_number() const { return omega0_ / kSpeedOfLight; }

// ---------------------------------------------------------------------------

RoundTrip roundtrip_response(double delta, const CavitySpec& cavity, const MediumResponse* medium,
                             double medium_length, const RoundTripOptions& options) {
    RoundTrip rt;
    rt.phi = 2.0 * cavity.length * delta / kSpeedOfLight;
    rt.rho = cavity.r;
    if (medium != nullptr) {
        if (!(medium_length > 0.0) || medium_length > cavity.length)
            fail(ErrorCode::InvalidArgument, "medium length must lie in (0, L]");
        const double kl = medium->wave_number() * medium_length;
        cplx x = medium->chi(delta);
        if (options.lock_resonance) x -= medium->chi(0.0).real();
        rt.phi += kl * x.real();
        if (options.include_amplitude) rt.rho *= std::exp(-kl * x.imag());
    }
    if (!(rt.rho < 1.0))
        fail(ErrorCode::AboveLasingThreshold,
             "round-trip amplitude " + std::to_string(rt.rho) + " at detuning " +
                 std::to_string(delta) + " rad/s");
    return rt;
}

double buildup(double delta, const CavitySpec& cavity, const MediumResponse* medium,
               double medium_length, const RoundTripOptions& options) {
    const RoundTrip rt = roundtrip_response(delta, cavity, medium, medium_length, options);
    const double s = std::sin(0.5 * rt.phi);
    return 1.0 / ((1.0 - rt.rho) * (1.0 - rt.rho) + 4.0 * rt.rho * s * s);
}

ResonanceProfile buildup_profile(const CavitySpec& cavity, const MediumResponse* medium,
                                 double medium_length, const std::vector<double>& deltas,
                                 const RoundTripOptions& options) {
    cavity.validate();
    ResonanceProfile p;
    p.delta = deltas;
    p.buildup.reserve(deltas.size());
    for (double d : deltas) {
        p.buildup.push_back(buildup(d, cavity, medium, medium_length, options));
        p.i_max = std::max(p.i_max, p.buildup.back());
    }
    p.evaluate = [cavity, medium, medium_length, options](double d) {
        return buildup(d, cavity, medium, medium_length, options);
    };
    return p;
}

namespace {

// Crossing of f = level between a (above) and b (below).
double bisect_crossing(const std::function<double(double)>& f, double a, double b, double level) {
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-13 * std::max(std::abs(a), std::abs(b));
         ++it) {
        const double m = 0.5 * (a + b);
        if (f(m) >= level)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

}  // namespace

double fwhm(const ResonanceProfile& profile) {
    const auto& x = profile.delta;
    const auto& y = profile.buildup;
    if (x.size() < 3 || y.size() != x.size())
        fail(ErrorCode::NoHalfCrossing, "profile has too few samples");
    const std::size_t peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double half = 0.5 * y[peak];

    std::function<double(double)> f = profile.evaluate;
    if (!f) {
        f = [&x, &y](double d) {
            const auto it = std::upper_bound(x.begin(), x.end(), d);
            const std::size_t j = std::clamp<std::size_t>(it - x.begin(), 1, x.size() - 1);
            const double t = (d - x[j - 1]) / (x[j] - x[j - 1]);
            return y[j - 1] + t * (y[j] - y[j - 1]);
        };
    }

    std::size_t lo = peak;
    while (lo > 0 && y[lo - 1] >= half) --lo;
    std::size_t hi = peak;
    while (hi + 1 < y.size() && y[hi + 1] >= half) ++hi;
    if (lo == 0 || hi + 1 == y.size())
        fail(ErrorCode::NoHalfCrossing, "profile stays above half maximum inside the range");
    const double left = bisect_crossing(f, x[lo], x[lo - 1], half);
    const double right = bisect_crossing(f, x[hi], x[hi + 1], half);
    return right - left;
}

double scan_fwhm(const std::function<double(double)>& f, double center, double step,
                 double max_offset) {
    if (!(step > 0.0)) fail(ErrorCode::InvalidArgument, "scan step must be positive");
    const double half = 0.5 * f(center);
    double edges[2];
    for (int side = 0; side < 2; ++side) {
        const double dir = side == 0 ? -1.0 : 1.0;
        double prev = 0.0;
        double off = step;
        bool found = false;
        while (off <= max_offset) {
            if (f(center + dir * off) < half) {
                found = true;
                break;
            }
            prev = off;
            off += step;
        }
        if (!found) fail(ErrorCode::NoHalfCrossing, "no half-maximum crossing within scan range");
        edges[side] = bisect_crossing(f, center + dir * prev, center + dir * off, half);
    }
    return edges[1] - edges[0];
}

double wlc_condition(double group_index) {
    if (!(group_index <= -1.0))
        fail(ErrorCode::InsufficientGroupIndex,
             "group index " + std::to_string(group_index) + " does not reach -1");
    return -group_index;
}

double wlc_bandwidth_analytic(const CavitySpec& cavity, double medium_length, double n3) {
    if (!(n3 > 0.0)) fail(ErrorCode::NonpositiveCubicTerm, "third-order term must be positive");
    if (!(medium_length > 0.0)) fail(ErrorCode::InvalidArgument, "medium length must be positive");
    return std::cbrt(4.0 * kPi * kSpeedOfLight /
                     (medium_length * cavity.omega0 * n3 * cavity.finesse()));
}

Flatness quadratic_flatness(const std::function<double(double)>& f, double half_window,
                            int samples) {
    if (!(half_window > 0.0) || samples < 5)
        fail(ErrorCode::IllConditionedFit, "flatness fit needs a window and 5 samples");
    const double f0 = f(0.0);
    Eigen::MatrixXd a(samples, 3);
    Eigen::VectorXd b(samples);
    for (int i = 0; i < samples; ++i) {
        const double x = -1.0 + 2.0 * i / (samples - 1);
        a(i, 0) = 1.0;
        a(i, 1) = x * x;
        a(i, 2) = x * x * x * x;
        b(i) = f(x * half_window) / f0;
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    const double rss = (a * c - b).squaredNorm();
    const Eigen::Matrix3d cov = (a.transpose() * a).inverse() * (rss / (samples - 3));
    return {c(1), std::sqrt(std::max(0.0, cov(1, 1))), half_window};
}

WlcGeometry solve_wlc_geometry(const std::function<double(double)>& group_index_at,
                               double cavity_length, double initial_length,
                               const WlcSolveOptions& options) {
    if (!(cavity_length > 0.0) || !(initial_length > 0.0))
        fail(ErrorCode::InvalidArgument, "lengths must be positive");
    WlcGeometry g;
    g.medium_length = initial_length;
    for (int it = 0;; ++it) {
        g.group_index = group_index_at(g.medium_length);
        const double ratio = wlc_condition(g.group_index);
        g.residual = std::abs(g.group_index * g.medium_length / cavity_length + 1.0);
        g.iterations = it;
        if (g.residual < options.tolerance) return g;
        if (it >= options.max_iterations)
            fail(ErrorCode::NoConvergence, "medium length iteration did not settle, residual " +
                                               std::to_string(g.residual));
        g.medium_length = cavity_length / ratio;
    }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 4)
        fail(ErrorCode::IllConditionedFit, "log-log fit needs at least 4 points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            fail(ErrorCode::IllConditionedFit, "log-log fit needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    if (!(sxx > 0.0)) fail(ErrorCode::IllConditionedFit, "abscissae coincide");
    return sxy / sxx;
}

ScalingResult enhancement_scaling(double cavity_length, double omega0,
                                  const std::vector<double>& finesses,
                                  const MediumResponse& medium, double medium_length,
                                  double gamma, const RoundTripOptions& options) {
    ScalingResult out;
    std::vector<double> xs, ys;
    for (double finesse : finesses) {
        const CavitySpec cavity = CavitySpec::from_finesse(cavity_length, finesse, omega0);
        ScalingSample s;
        s.finesse = finesse;
        s.gamma0 = empty_bandwidth(cavity);
        const double reach = std::min({-medium.min_delta(), medium.max_delta(), 1e4 * s.gamma0});
        s.gamma1 = scan_fwhm(
            [&](double d) { return buildup(d, cavity, &medium, medium_length, options); }, 0.0,
            s.gamma0 / 20.0, reach);
        s.ratio = s.gamma1 / s.gamma0;
        out.samples.push_back(s);
        xs.push_back(s.gamma0 / gamma);
        ys.push_back(s.ratio);
    }
    out.slope = loglog_slope(xs, ys);
    return out;
}

}  // namespace wlc
