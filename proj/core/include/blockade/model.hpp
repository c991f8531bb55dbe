#pragma once

#include <cmath>
#include <vector>

#include "blockade/fock.hpp"

namespace blockade {

/// Physical parameters of the hybrid cavity-magnon-mechanical system with a
/// driven two-level atom. All frequencies are angular and expressed in units
/// of the common decay rate kappa.
struct SystemParams {
  double omega_c = 0.0;   // cavity frequency
  double omega_m = 0.0;   // magnon frequency
  double omega_b = 0.0;   // phonon frequency
  double omega_a = 0.0;   // atomic transition frequency
  double omega_L = 0.0;   // drive frequency
  double G_m = 0.0;       // photon-magnon beam-splitter coupling
  double g = 0.0;         // single-photon optomechanical coupling
  double g_a = 0.0;       // atom-photon coupling
  double Omega_e = 0.0;   // atom drive amplitude
  double kappa = 1.0;     // decay rate of a_+, a_-, sigma
  double kappa_b = 0.0;   // phonon decay rate
  double n_th = 0.0;      // thermal phonon occupation

  double delta() const { return omega_c - omega_L; }
  double Delta() const { return delta() + G_m; }
  double Delta_a() const { return omega_a - omega_L; }
  double eta() const { return g / 2.0; }
  double eta_a() const { return g_a / std::sqrt(2.0); }

  /// Constrained constructor: omega_m = omega_c, omega_b = 2 G_m,
  /// Delta_a = Delta, with Delta as the scan variable.
  static SystemParams constrained(double Delta, double eta, double eta_a,
                                  double Omega_e, double G_m,
                                  double kappa_b = 0.0, double n_th = 0.0,
                                  double kappa = 1.0);

  /// Throws std::invalid_argument on non-finite values, kappa <= 0,
  /// n_th < 0, or negative decay rates.
  void validate() const;
};

struct DissipatorSpec {
  SparseOperator op;
  double rate = 0.0;
};

/// Standard four-partite spaces with the default truncation of 6 Fock levels
/// (|0>..|5>) per bosonic mode.
CompositeSpace make_space(int boson_levels = 6, Layout layout = Layout::Supermode);

/// Rotating-frame Hamiltonian of the full model on the bare layout
/// [qubit, a, m, b]:
///   delta_c a'a + delta_m m'm + G_m(a'm + am') + omega_b b'b
///   + g a'a (b' + b) + Delta_a s's + g_a(s a' + s' a) + Omega_e(s + s').
SparseOperator build_full_hamiltonian(const SystemParams& params,
                                      const CompositeSpace& space);

/// Effective RWA Hamiltonian on the supermode layout [qubit, a_+, a_-, b]:
///   Delta n_+ + (Delta - 2G_m) n_- + omega_b n_b + Delta_a s's
///   - eta(a_+' a_- b + h.c.) + eta_a(a_+' s + h.c.) + Omega_e(s + s').
SparseOperator build_effective_hamiltonian(const SystemParams& params,
                                           const CompositeSpace& space);

/// Diagonal generator 2 G_m (b'b - a_-'a_-) of the fast frame rotation.
/// Subtracting it from the effective Hamiltonian removes the +-2G_m
/// diagonal while leaving every dissipation channel invariant (a_- and b are
/// eigenoperators of the rotation), so steady states and number-operator
/// observables are unchanged.
SparseOperator fast_frame_generator(const SystemParams& params,
                                    const CompositeSpace& space);

/// Dissipator list of the master equation with the convention
/// D[o]rho = 2 o rho o' - o'o rho - rho o'o:
/// (a_+, kappa), (a_-, kappa), (sigma, kappa),
/// (b, (n_th+1) kappa_b), (b', n_th kappa_b); zero-rate entries omitted.
std::vector<DissipatorSpec> build_dissipators(const SystemParams& params,
                                              const CompositeSpace& space);

struct BareModeOperators {
  SparseOperator a;  // photon annihilator, (a_+ + a_-)/sqrt(2)
  SparseOperator m;  // magnon annihilator, (a_+ - a_-)/sqrt(2)
};

/// Bare photon/magnon annihilators expressed on a supermode-layout space.
BareModeOperators bare_mode_operators(const CompositeSpace& space);

/// The supermode product state |qubit, n_+, n_-, n_b> written in the bare
/// layout, built by applying (a' +- m')/sqrt(2) creation strings to the
/// vacuum. Used to map initial states and projectors between layouts.
StateVector supermode_state_in_bare(const CompositeSpace& bare_space, int qubit,
                                    int n_plus, int n_minus, int n_b);

}  // namespace blockade
