#include "blockade/model.hpp"

#include <cmath>
#include <stdexcept>

namespace blockade {

SystemParams SystemParams::constrained(double Delta, double eta, double eta_a,
                                       double Omega_e, double G_m,
                                       double kappa_b, double n_th,
                                       double kappa) {
  SystemParams p;
  p.omega_c = 0.0;
  p.omega_m = p.omega_c;
  p.omega_b = 2.0 * G_m;
  p.omega_L = p.omega_c - (Delta - G_m);  // delta = Delta - G_m
  p.omega_a = p.omega_L + Delta;          // Delta_a = Delta
  p.G_m = G_m;
  p.g = 2.0 * eta;
  p.g_a = std::sqrt(2.0) * eta_a;
  p.Omega_e = Omega_e;
  p.kappa = kappa;
  p.kappa_b = kappa_b;
  p.n_th = n_th;
  p.validate();
  return p;
}

void SystemParams::validate() const {
  const double vals[] = {omega_c, omega_m, omega_b, omega_a, omega_L, G_m,
                         g,       g_a,     Omega_e, kappa,   kappa_b, n_th};
  for (double v : vals)
    if (!std::isfinite(v))
      throw std::invalid_argument("SystemParams: non-finite parameter");
  if (kappa <= 0.0) throw std::invalid_argument("SystemParams: kappa must be > 0");
  if (kappa_b < 0.0) throw std::invalid_argument("SystemParams: kappa_b < 0");
  if (n_th < 0.0) throw std::invalid_argument("SystemParams: n_th < 0");
}

CompositeSpace make_space(int boson_levels, Layout layout) {
  return CompositeSpace({2, boson_levels, boson_levels, boson_levels}, layout);
}

namespace {
void require_layout(const CompositeSpace& space, Layout layout,
                    const char* what) {
  if (space.num_subsystems() != 4)
    throw std::invalid_argument(std::string(what) + ": expected 4 subsystems");
  if (space.layout() != layout)
    throw std::invalid_argument(std::string(what) + ": wrong space layout");
}
}  // namespace

SparseOperator build_full_hamiltonian(const SystemParams& params,
                                      const CompositeSpace& space) {
  params.validate();
  require_layout(space, Layout::Bare, "build_full_hamiltonian");
  const SparseOperator a = annihilator(space, 1);
  const SparseOperator m = annihilator(space, 2);
  const SparseOperator b = annihilator(space, 3);
  const SparseOperator sig = annihilator(space, 0);
  const SparseOperator ad = a.adjoint(), md = m.adjoint(), bd = b.adjoint(),
                       sd = sig.adjoint();
  const double delta_c = params.omega_c - params.omega_L;
  const double delta_m = params.omega_m - params.omega_L;

  SparseOperator h = delta_c * (ad * a) + delta_m * (md * m) +
                     params.G_m * (ad * m + a * md) +
                     params.omega_b * (bd * b) +
                     params.g * ((ad * a) * (bd + b)) +
                     params.Delta_a() * (sd * sig) +
                     params.g_a * (sig * ad + sd * a) +
                     params.Omega_e * (sig + sd);
  // symmetrize so conjugate-transpose symmetry is bit-exact
  h = 0.5 * (h + h.adjoint());
  return h.prune();
}

SparseOperator build_effective_hamiltonian(const SystemParams& params,
                                           const CompositeSpace& space) {
  params.validate();
  require_layout(space, Layout::Supermode, "build_effective_hamiltonian");
  const SparseOperator ap = annihilator(space, 1);
  const SparseOperator am = annihilator(space, 2);
  const SparseOperator b = annihilator(space, 3);
  const SparseOperator sig = annihilator(space, 0);
  const SparseOperator apd = ap.adjoint(), amd = am.adjoint(), bd = b.adjoint(),
                       sd = sig.adjoint();
  const double Delta = params.Delta();

  SparseOperator tri = apd * am * b;  // a_+' a_- b
  SparseOperator h = Delta * (apd * ap) + (Delta - 2.0 * params.G_m) * (amd * am) +
                     params.omega_b * (bd * b) + params.Delta_a() * (sd * sig) -
                     params.eta() * (tri + tri.adjoint()) +
                     params.eta_a() * (apd * sig + ap * sd) +
                     params.Omega_e * (sig + sd);
  h = 0.5 * (h + h.adjoint());
  return h.prune();
}

SparseOperator fast_frame_generator(const SystemParams& params,
                                    const CompositeSpace& space) {
  require_layout(space, Layout::Supermode, "fast_frame_generator");
  return 2.0 * params.G_m *
         (number_operator(space, 3) - number_operator(space, 2));
}

std::vector<DissipatorSpec> build_dissipators(const SystemParams& params,
                                              const CompositeSpace& space) {
  params.validate();
  require_layout(space, Layout::Supermode, "build_dissipators");
  std::vector<DissipatorSpec> d;
  if (params.kappa > 0.0) {
    d.push_back({annihilator(space, 1), params.kappa});
    d.push_back({annihilator(space, 2), params.kappa});
    d.push_back({annihilator(space, 0), params.kappa});
  }
  const double loss = (params.n_th + 1.0) * params.kappa_b;
  const double gain = params.n_th * params.kappa_b;
  if (loss > 0.0) d.push_back({annihilator(space, 3), loss});
  if (gain > 0.0) d.push_back({creator(space, 3), gain});
  return d;
}

BareModeOperators bare_mode_operators(const CompositeSpace& space) {
  require_layout(space, Layout::Supermode, "bare_mode_operators");
  const SparseOperator ap = annihilator(space, 1);
  const SparseOperator am = annihilator(space, 2);
  const double r = 1.0 / std::sqrt(2.0);
  return {r * (ap + am), r * (ap - am)};
}

StateVector supermode_state_in_bare(const CompositeSpace& bare_space, int qubit,
                                    int n_plus, int n_minus, int n_b) {
  require_layout(bare_space, Layout::Bare, "supermode_state_in_bare");
  StateVector psi = StateVector::basis_state(bare_space, {qubit, 0, 0, n_b});
  const SparseOperator ad = creator(bare_space, 1);
  const SparseOperator md = creator(bare_space, 2);
  const double r = 1.0 / std::sqrt(2.0);
  const SparseOperator cp = r * (ad + md);  // a_+'
  const SparseOperator cm = r * (ad - md);  // a_-'
  for (int k = 0; k < n_plus; ++k) psi = cp * psi;
  for (int k = 0; k < n_minus; ++k) psi = cm * psi;
  double fact = 1.0;
  for (int k = 1; k <= n_plus; ++k) fact *= k;
  for (int k = 1; k <= n_minus; ++k) fact *= k;
  psi.amplitudes() /= std::sqrt(fact);
  return psi;
}

}  // namespace blockade
