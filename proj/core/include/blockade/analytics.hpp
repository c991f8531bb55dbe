#pragma once

#include <array>
#include <string_view>

#include "blockade/fock.hpp"
#include "blockade/model.hpp"

namespace blockade {

/// Fixed ordering of the nine weak-drive basis states
/// |qubit, n_+, n_-, n_b> used throughout the closed-form layer.
enum WeakDriveState : int {
  kG000 = 0,
  kG100 = 1,
  kG011 = 2,
  kE000 = 3,
  kG200 = 4,
  kG111 = 5,
  kE100 = 6,
  kG022 = 7,
  kE011 = 8,
};

inline constexpr std::array<std::array<int, 4>, 9> kWeakDriveOccupations = {{
    {0, 0, 0, 0},  // g000
    {0, 1, 0, 0},  // g100
    {0, 0, 1, 1},  // g011
    {1, 0, 0, 0},  // e000
    {0, 2, 0, 0},  // g200
    {0, 1, 1, 1},  // g111
    {1, 1, 0, 0},  // e100
    {0, 0, 2, 2},  // g022
    {1, 0, 1, 1},  // e011
}};

inline constexpr std::array<std::string_view, 9> kWeakDriveLabels = {
    "g000", "g100", "g011", "e000", "g200", "g111", "e100", "g022", "e011"};

struct Betas {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double D = 0.0;
};

/// beta_1 = sqrt(eta_a^2 + eta^2), beta_{2,3}^2 = (3 eta_a^2 + 7 eta^2 -+ D)/2,
/// D = sqrt(eta_a^4 + 26 eta_a^2 eta^2 + 25 eta^4).
Betas betas(double eta, double eta_a);

using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Matrix9cd = Eigen::Matrix<Complex, 9, 9>;
using Vector9d = Eigen::Matrix<double, 9, 1>;
using Vector9cd = Eigen::Matrix<Complex, 9, 1>;

/// Dressed-state spectrum of the undriven effective Hamiltonian restricted to
/// the two-excitation subspace. Eigenvalues in units of kappa; dressed-state
/// columns ordered [0, 1_0, 1_-, 1_+, 2_0, 2_1-, 2_1+, 2_2-, 2_2+] over the
/// kWeakDriveState basis.
struct SpectrumResult {
  Betas b;
  double lambda0 = 0.0;
  double lambda10 = 0.0;
  double lambda1m = 0.0, lambda1p = 0.0;
  double lambda20 = 0.0;
  double lambda21m = 0.0, lambda21p = 0.0;
  double lambda22m = 0.0, lambda22p = 0.0;
  Matrix9d dressed = Matrix9d::Zero();
  /// True when eta == 0 or eta_a == 0 and the coefficient tables (which
  /// divide by eta and eta_a) were replaced by dense diagonalization.
  bool degenerate_fallback = false;

  std::array<double, 9> eigenvalues() const {
    return {lambda0,  lambda10, lambda1m, lambda1p, lambda20,
            lambda21m, lambda21p, lambda22m, lambda22p};
  }
};

SpectrumResult spectrum(const SystemParams& params);

/// The nine steady-state amplitudes of the weak-drive ansatz, unnormalized
/// convention C_g000 = 1.
struct AmplitudeSet {
  std::array<Complex, 9> c{};
  Complex delta_tilde{};  // Delta - i kappa
  Complex B{};            // (1/2)(dt^2-b1^2)(4dt^2-b2^2)(4dt^2-b3^2)

  const Complex& operator[](WeakDriveState s) const { return c[s]; }
  Complex& operator[](WeakDriveState s) { return c[s]; }
};

/// Closed-form steady amplitudes. Throws when |B| is below 1e-14 in natural
/// units (singular configuration).
AmplitudeSet steady_amplitudes(const SystemParams& params);

/// The complex 9x9 generator M of the non-Hermitian amplitude equations,
/// i dC/dt = M C, with Delta_tilde = Delta - i kappa on the diagonal.
/// With `include_drive` false and `kappa` ignored (real Delta) this is the
/// Hermitian weak-drive block of the effective Hamiltonian.
Matrix9cd amplitude_equation_matrix(const SystemParams& params,
                                    bool include_drive, bool include_decay);

/// Fixed point of the amplitude equations: solves the 8x8 linear system with
/// C_g000 = 1. Independent oracle for steady_amplitudes.
AmplitudeSet ode_fixed_point(const SystemParams& params);

/// Equal-time correlators evaluated from weak-drive amplitudes. "exact"
/// keeps the u_1/u_2 denominator corrections, "approx" is the leading-order
/// form. The bare-mode value exists only in leading order and is identical
/// for a and m. decomposition_* report the two sides of the
/// g_a^2 ~ g_{a_+}^2/F_2^2 + (2/F_1 - 1/F_1^2) g_{a_-}^2 diagnostic.
struct AnalyticG2 {
  double aplus_exact = 0.0, aplus_approx = 0.0;
  double aminus_exact = 0.0, aminus_approx = 0.0;
  double bare_approx = 0.0;  // g_a^2(0) = g_m^2(0)
  double F1 = 0.0, F2 = 0.0;
  double decomposition_lhs = 0.0;  // bare_approx
  double decomposition_rhs = 0.0;
};

AnalyticG2 analytic_g2(const SystemParams& params);
AnalyticG2 analytic_g2(const SystemParams& params, const AmplitudeSet& amps);

/// Real roots (in Delta, for fixed eta/eta_a) of the numerator conditions
/// that locate the destructive-interference dips of each supermode:
/// a_+ : 4 Dt^4 + Dt^2(eta^2-eta_a^2) - 2 eta^4 = 0 evaluated at real Delta,
/// a_- : 5 Dt^2 - eta_a^2 + eta^2 = 0. Returns the positive root, or NaN.
double interference_dip_aplus(double eta, double eta_a);
double interference_dip_aminus(double eta, double eta_a);

/// Unitary change of basis between the supermode two-mode Fock basis
/// |n_+, n_->_d and the bare basis, block-diagonal per total excitation
/// sector, for all sectors 0..n_max. Basis ordering: sectors ascending; in
/// sector s the dressed side is |s,0>_d, |s-1,1>_d, ..., |0,s>_d and the bare
/// side |s,0>, ..., |0,s> with bare labels ordered (n_m, n_a).
struct BasisChange {
  int n_max = 0;
  Eigen::MatrixXd U;  // U(bare, dressed): columns are dressed states

  int index(int n_first, int n_second) const;  // within the sector ordering
  int size() const { return static_cast<int>(U.rows()); }
};

BasisChange basis_change(int n_max);

}  // namespace blockade
