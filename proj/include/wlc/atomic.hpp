#pragma once

// Four-level double-Lambda atom: |1>,|2> ground, |3>,|4> excited.
// Controls drive 1-3 (Omega31) and 2-4 (Omega42), the probe drives 1-4
// (Omega41) and four-wave mixing generates a field on 2-3 (Omega32).
//
// All rates, detunings and Rabi frequencies are in units of the reference
// rate gamma; times are in units of 1/gamma.

#include <array>
#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace wlc {

using cplx = std::complex<double>;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;

// Zero-based basis indices.
inline constexpr int kLevel1 = 0;
inline constexpr int kLevel2 = 1;
inline constexpr int kLevel3 = 2;
inline constexpr int kLevel4 = 3;

struct LevelScheme {
    double gamma31 = 0.5;
    double gamma32 = 0.5;
    double gamma41 = 0.5;
    double gamma42 = 0.5;
    double delta31 = 0.0;
    double delta42 = 0.0;
    double delta41 = 0.0;

    // Detuning of the generated field, fixed by closure of the interaction loop.
    double delta32() const { return delta31 + delta42 - delta41; }

    // Largest total decay rate out of an excited state.
    double max_total_decay() const;

    void validate() const;
};

struct FieldAmplitudes {
    cplx omega31{};
    cplx omega42{};
    cplx omega41{};
    cplx omega32{};

    double max_abs() const;
    bool finite() const;
};

class AtomState {
public:
    AtomState();  // all population in |1>
    explicit AtomState(const Matrix4c& rho) : rho_(rho) {}

    static AtomState pure(int level);
    // Incoherent mixture of the two ground states with weight p1 on |1>.
    static AtomState ground_mixture(double p1 = 0.5);

    const Matrix4c& rho() const { return rho_; }
    Matrix4c& rho() { return rho_; }

    double population(int level) const { return rho_(level, level).real(); }
    cplx coherence(int row, int col) const { return rho_(row, col); }

    double trace_deviation() const;
    double hermiticity_error() const;
    double min_eigenvalue() const;

    // Checks the documented tolerances (Hermitian to 1e-12, unit trace to
    // 1e-10, eigenvalues above -1e-8); throws InvalidArgument otherwise.
    void validate() const;

private:
    Matrix4c rho_;
};

// Rotating-frame Hamiltonian. Diagonal is (0, d42 - d41, -d31, -d41) and each
// driven transition j<-k carries -Omega_jk/2 below the diagonal.
Matrix4c build_hamiltonian(const FieldAmplitudes& fields, const LevelScheme& scheme);

// Lindblad right-hand side: -i[H, rho] plus spontaneous decay from 3,4 into 1,2.
Matrix4c master_equation_rhs(const Matrix4c& rho, const Matrix4c& hamiltonian,
                             const LevelScheme& scheme);

// Largest step accepted by evolve_atom_step: 0.1 / max(decay, |Omega|, |delta|).
double max_stable_step(const FieldAmplitudes& fields, const LevelScheme& scheme);

// One classical RK4 step with fields held constant across the step.
AtomState evolve_atom_step(const AtomState& state, const FieldAmplitudes& fields,
                           const LevelScheme& scheme, double dt);

// RK4 step with Hamiltonians given at the start, midpoint and end of the step.
// Used by the propagation loop where the fields vary during the step. Does no
// validation; callers check trace drift themselves.
Matrix4c rk4_step(const Matrix4c& rho, const Matrix4c& h_start, const Matrix4c& h_mid,
                  const Matrix4c& h_end, const LevelScheme& scheme, double dt);

// 16x16 Liouvillian acting on the row-major vectorization of rho.
using Liouvillian = Eigen::Matrix<cplx, 16, 16>;
Liouvillian build_liouvillian(const FieldAmplitudes& fields, const LevelScheme& scheme);

struct SteadyStateOptions {
    std::optional<AtomState> initial;  // used only when the null space is degenerate
    double max_time = 5000.0;          // 1/gamma, for the integration fallback
    double tolerance = 1e-11;          // RHS norm that ends the integration fallback
};

// Null-space solve of the Liouvillian. A degenerate null space falls back to
// long-time integration from options.initial, or throws DegenerateSteadyState.
AtomState steady_state(const FieldAmplitudes& fields, const LevelScheme& scheme,
                       const SteadyStateOptions& options = {});

// First-order response of the loop coherences to weak probe and generated
// fields around the controls-only steady state:
//   rho41 = probe_self * Omega41 + probe_cross * conj(Omega32)
//   rho32 = gen_self   * Omega32 + gen_cross   * conj(Omega41)
// Coefficients are in units of 1/gamma.
struct LoopResponse {
    cplx probe_self;
    cplx probe_cross;
    cplx gen_self;
    cplx gen_cross;
};

// `controls` supplies Omega31 and Omega42 (Omega41, Omega32 are ignored);
// the probe detuning is `probe_detuning` and overrides scheme.delta41.
// `reference` is the zeroth-order state used when the controls-only steady
// state is degenerate (e.g. no controls at all).
LoopResponse linear_loop_response(const FieldAmplitudes& controls, const LevelScheme& scheme,
                                  double probe_detuning,
                                  const std::optional<AtomState>& reference = std::nullopt);

// Uniform slab used to resolve the probe/generated-field coupling when the
// four-wave-mixing loop is included in the single-atom picture.
struct UniformSlab {
    double eta41 = 0.0;   // gamma / m
    double eta32 = 0.0;   // gamma / m
    double length = 0.0;  // m
};

// Linear probe response rho41 / Omega41 (units 1/gamma). For a two-level
// transition on resonance the value is i / (gamma41 + gamma42), i.e. purely
// imaginary and positive for absorption. Multiply by 2 * eta41 / k to obtain
// the dimensionless susceptibility.
//
// With include_4wm the probe and the conjugate generated field are propagated
// together through `slab` with the local response held fixed, and the
// effective response is read off the probe transmission. Without it the loop
// coherence is ignored and `slab` is unused.
cplx linear_probe_susceptibility(const FieldAmplitudes& controls, const LevelScheme& scheme,
                                 double probe_detuning, bool include_4wm,
                                 const UniformSlab& slab = {},
                                 const std::optional<AtomState>& reference = std::nullopt);

}  // namespace wlc
