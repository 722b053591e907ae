#include "wlc/atomic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "wlc/errors.hpp"

namespace wlc {

namespace {

struct Decay {
    int from;
    int to;
    double rate;
};

std::array<Decay, 4> decays(const LevelScheme& s) {
    return {{{kLevel3, kLevel1, s.gamma31},
             {kLevel3, kLevel2, s.gamma32},
             {kLevel4, kLevel1, s.gamma41},
             {kLevel4, kLevel2, s.gamma42}}};
}

Matrix4c hermitian_part(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

using Vector16c = Eigen::Matrix<cplx, 16, 1>;

Vector16c vectorize(const Matrix4c& m) {
    Vector16c v;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) v(a * 4 + b) = m(a, b);
    return v;
}

Matrix4c unvectorize(const Vector16c& v) {
    Matrix4c m;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) m(a, b) = v(a * 4 + b);
    return m;
}

}  // namespace

double LevelScheme::max_total_decay() const {
    return std::max(gamma31 + gamma32, gamma41 + gamma42);
}

void LevelScheme::validate() const {
    for (double g : {gamma31, gamma32, gamma41, gamma42}) {
        if (!(g >= 0.0) || !std::isfinite(g))
            fail(ErrorCode::InvalidArgument, "decay rates must be finite and non-negative");
    }
    for (double d : {delta31, delta42, delta41}) {
        if (!std::isfinite(d)) fail(ErrorCode::InvalidArgument, "detunings must be finite");
    }
}

double FieldAmplitudes::max_abs() const {
    return std::max({std::abs(omega31), std::abs(omega42), std::abs(omega41), std::abs(omega32)});
}

bool FieldAmplitudes::finite() const {
    for (const cplx& v : {omega31, omega42, omega41, omega32}) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

AtomState::AtomState() : rho_(Matrix4c::Zero()) { rho_(kLevel1, kLevel1) = 1.0; }

AtomState AtomState::pure(int level) {
    if (level < 0 || level > 3) fail(ErrorCode::InvalidArgument, "level index out of range");
    Matrix4c rho = Matrix4c::Zero();
    rho(level, level) = 1.0;
    return AtomState(rho);
}

AtomState AtomState::ground_mixture(double p1) {
    if (!(p1 >= 0.0 && p1 <= 1.0))
        fail(ErrorCode::InvalidArgument, "ground mixture weight must lie in [0, 1]");
    Matrix4c rho = Matrix4c::Zero();
    rho(kLevel1, kLevel1) = p1;
    rho(kLevel2, kLevel2) = 1.0 - p1;
    return AtomState(rho);
}

double AtomState::trace_deviation() const { return std::abs(rho_.trace() - 1.0); }

double AtomState::hermiticity_error() const { return (rho_ - rho_.adjoint()).norm(); }

double AtomState::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix4c> solver(hermitian_part(rho_),
                                                   Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

void AtomState::validate() const {
    if (!rho_.allFinite()) fail(ErrorCode::InvalidArgument, "density matrix is not finite");
    if (hermiticity_error() > 1e-12)
        fail(ErrorCode::InvalidArgument, "density matrix is not Hermitian");
    if (trace_deviation() > 1e-10)
        fail(ErrorCode::InvalidArgument, "density matrix trace differs from 1");
    if (min_eigenvalue() < -1e-8)
        fail(ErrorCode::InvalidArgument, "density matrix has a negative eigenvalue");
}

Matrix4c build_hamiltonian(const FieldAmplitudes& fields, const LevelScheme& scheme) {
    Matrix4c h = Matrix4c::Zero();
    h(kLevel2, kLevel2) = scheme.delta42 - scheme.delta41;
    h(kLevel3, kLevel3) = -scheme.delta31;
    h(kLevel4, kLevel4) = -scheme.delta41;

    auto couple = [&h](int excited, int ground, cplx omega) {
        h(excited, ground) = -0.5 * omega;
        h(ground, excited) = std::conj(-0.5 * omega);
    };
    couple(kLevel3, kLevel1, fields.omega31);
    couple(kLevel4, kLevel2, fields.omega42);
    couple(kLevel4, kLevel1, fields.omega41);
    couple(kLevel3, kLevel2, fields.omega32);
    return h;
}

Matrix4c master_equation_rhs(const Matrix4c& rho, const Matrix4c& hamiltonian,
                             const LevelScheme& scheme) {
    const cplx minus_i(0.0, -1.0);
    Matrix4c out = minus_i * (hamiltonian * rho - rho * hamiltonian);
    for (const Decay& d : decays(scheme)) {
        if (d.rate == 0.0) continue;
        out(d.to, d.to) += d.rate * rho(d.from, d.from);
        out.row(d.from) -= 0.5 * d.rate * rho.row(d.from);
        out.col(d.from) -= 0.5 * d.rate * rho.col(d.from);
    }
    return out;
}

double max_stable_step(const FieldAmplitudes& fields, const LevelScheme& scheme) {
    const double scale =
        std::max({scheme.max_total_decay(), fields.max_abs(), std::abs(scheme.delta31),
                  std::abs(scheme.delta42), std::abs(scheme.delta41), std::abs(scheme.delta32())});
    if (scale == 0.0) return std::numeric_limits<double>::infinity();
    return 0.1 / scale;
}

Matrix4c rk4_step(const Matrix4c& rho, const Matrix4c& h_start, const Matrix4c& h_mid,
                  const Matrix4c& h_end, const LevelScheme& scheme, double dt) {
    const Matrix4c k1 = master_equation_rhs(rho, h_start, scheme);
    const Matrix4c k2 = master_equation_rhs(rho + (0.5 * dt) * k1, h_mid, scheme);
    const Matrix4c k3 = master_equation_rhs(rho + (0.5 * dt) * k2, h_mid, scheme);
    const Matrix4c k4 = master_equation_rhs(rho + dt * k3, h_end, scheme);
    return hermitian_part(rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

AtomState evolve_atom_step(const AtomState& state, const FieldAmplitudes& fields,
                           const LevelScheme& scheme, double dt) {
    if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "time step must be positive");
    const double bound = max_stable_step(fields, scheme);
    if (dt > bound * (1.0 + 1e-12)) {
        fail(ErrorCode::InvalidArgument,
             "time step " + std::to_string(dt) + " exceeds stability bound " +
                 std::to_string(bound));
    }
    const Matrix4c h = build_hamiltonian(fields, scheme);
    AtomState next(rk4_step(state.rho(), h, h, h, scheme, dt));
    if (!next.rho().allFinite() || next.trace_deviation() > 1e-6)
        fail(ErrorCode::StepUnstable, "trace drifted after atomic step");
    return next;
}

Liouvillian build_liouvillian(const FieldAmplitudes& fields, const LevelScheme& scheme) {
    const Matrix4c h = build_hamiltonian(fields, scheme);
    Liouvillian l;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            Matrix4c basis = Matrix4c::Zero();
            basis(a, b) = 1.0;
            l.col(a * 4 + b) = vectorize(master_equation_rhs(basis, h, scheme));
        }
    }
    return l;
}

namespace {

AtomState normalized(const Matrix4c& m) {
    const cplx tr = m.trace();
    return AtomState(hermitian_part(m / tr));
}

AtomState integrate_to_steady(const AtomState& start, const FieldAmplitudes& fields,
                              const LevelScheme& scheme, const SteadyStateOptions& options) {
    const Matrix4c h = build_hamiltonian(fields, scheme);
    double dt = max_stable_step(fields, scheme);
    if (!std::isfinite(dt)) dt = 0.1;
    Matrix4c rho = start.rho();
    for (double t = 0.0; t < options.max_time; t += dt) {
        if (master_equation_rhs(rho, h, scheme).norm() < options.tolerance)
            return normalized(rho);
        rho = rk4_step(rho, h, h, h, scheme, dt);
    }
    if (master_equation_rhs(rho, h, scheme).norm() < options.tolerance) return normalized(rho);
    fail(ErrorCode::NoConvergence, "steady-state integration did not settle");
}

}  // namespace

AtomState steady_state(const FieldAmplitudes& fields, const LevelScheme& scheme,
                       const SteadyStateOptions& options) {
    scheme.validate();
    if (!fields.finite()) fail(ErrorCode::InvalidArgument, "field amplitudes must be finite");
    const Liouvillian l = build_liouvillian(fields, scheme);
    Eigen::JacobiSVD<Liouvillian> svd(l, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * std::max(1.0, sv(0));
    int nullity = 0;
    for (int i = 0; i < 16; ++i) nullity += sv(i) < cutoff ? 1 : 0;

    if (nullity == 1) {
        const Vector16c v = svd.matrixV().col(15);
        return normalized(unvectorize(v));
    }
    if (!options.initial) {
        fail(ErrorCode::DegenerateSteadyState,
             "Liouvillian null space has dimension " + std::to_string(nullity));
    }
    return integrate_to_steady(*options.initial, fields, scheme, options);
}

namespace {

// Holomorphic and anti-holomorphic parts of the first-order density-matrix
// response to a single weak field.
struct FieldResponse {
    Matrix4c holo;
    Matrix4c anti;
};

using Augmented = Eigen::Matrix<cplx, 17, 16>;
using Rhs17 = Eigen::Matrix<cplx, 17, 1>;

Matrix4c solve_first_order(const Eigen::CompleteOrthogonalDecomposition<Augmented>& solver,
                           const Augmented& system, const Liouvillian& perturbation,
                           const Matrix4c& rho0) {
    Rhs17 rhs = Rhs17::Zero();
    rhs.head<16>() = -(perturbation * vectorize(rho0));
    const Vector16c x = solver.solve(rhs);
    const double residual = (system * x - rhs).norm();
    if (!x.allFinite() || residual > 1e-8 * std::max(1.0, rhs.norm())) {
        fail(ErrorCode::SingularLinearSystem,
             "linear response system is inconsistent (dark resonance pole)");
    }
    return unvectorize(x);
}

}  // namespace

LoopResponse linear_loop_response(const FieldAmplitudes& controls, const LevelScheme& scheme_in,
                                  double probe_detuning,
                                  const std::optional<AtomState>& reference) {
    LevelScheme scheme = scheme_in;
    scheme.delta41 = probe_detuning;
    scheme.validate();

    FieldAmplitudes base = controls;
    base.omega41 = 0.0;
    base.omega32 = 0.0;

    AtomState rho0;
    try {
        rho0 = steady_state(base, scheme);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateSteadyState || !reference) throw;
        rho0 = *reference;
    }

    const Liouvillian l0 = build_liouvillian(base, scheme);
    Augmented system = Augmented::Zero();
    system.topRows<16>() = l0;
    for (int a = 0; a < 4; ++a) system(16, a * 4 + a) = 1.0;
    const Eigen::CompleteOrthogonalDecomposition<Augmented> solver(system);

    auto respond = [&](auto set_field) {
        FieldAmplitudes re = base;
        FieldAmplitudes im = base;
        set_field(re, cplx(1.0, 0.0));
        set_field(im, cplx(0.0, 1.0));
        const Matrix4c x_re = solve_first_order(solver, system, build_liouvillian(re, scheme) - l0, rho0.rho());
        const Matrix4c x_im = solve_first_order(solver, system, build_liouvillian(im, scheme) - l0, rho0.rho());
        const cplx i(0.0, 1.0);
        return FieldResponse{0.5 * (x_re - i * x_im), 0.5 * (x_re + i * x_im)};
    };
    const FieldResponse probe = respond([](FieldAmplitudes& f, cplx v) { f.omega41 = v; });
    const FieldResponse gen = respond([](FieldAmplitudes& f, cplx v) { f.omega32 = v; });

    return LoopResponse{probe.holo(kLevel4, kLevel1), gen.anti(kLevel4, kLevel1),
                        gen.holo(kLevel3, kLevel2), probe.anti(kLevel3, kLevel2)};
}

cplx linear_probe_susceptibility(const FieldAmplitudes& controls, const LevelScheme& scheme,
                                 double probe_detuning, bool include_4wm,
                                 const UniformSlab& slab,
                                 const std::optional<AtomState>& reference) {
    const LoopResponse r = linear_loop_response(controls, scheme, probe_detuning, reference);
    if (!include_4wm) return r.probe_self;
    if (!(slab.length > 0.0) || !(slab.eta41 > 0.0) || slab.eta32 < 0.0)
        fail(ErrorCode::InvalidArgument, "four-wave-mixing response needs a slab with eta41 > 0");

    // d/dz (Omega41, conj Omega32) = M (Omega41, conj Omega32)
    const cplx i(0.0, 1.0);
    const cplx m00 = i * slab.eta41 * r.probe_self;
    const cplx m01 = i * slab.eta41 * r.probe_cross;
    const cplx m10 = -i * slab.eta32 * std::conj(r.gen_cross);
    const cplx m11 = -i * slab.eta32 * std::conj(r.gen_self);

    // exp(M l) for a 2x2 matrix via its traceless part.
    const double len = slab.length;
    const cplx half_trace = 0.5 * (m00 + m11);
    const cplx s = std::sqrt(0.25 * (m00 - m11) * (m00 - m11) + m01 * m10) * len;
    const cplx sinh_over_s = std::abs(s) < 1e-8 ? cplx(1.0) + s * s / 6.0 : std::sinh(s) / s;
    const cplx transmission =
        std::exp(half_trace * len) * (std::cosh(s) + sinh_over_s * 0.5 * (m00 - m11) * len);
    return std::log(transmission) / (i * slab.eta41 * len);
}

}  // namespace wlc
