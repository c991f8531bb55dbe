#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "blockade/dynamics.hpp"
#include "blockade/model.hpp"

using namespace blockade;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
  return g;
}

/// Damped two-level system with coherent drive:
/// H = Delta s's + Omega (s + s'), dissipator (s, kappa).
Liouvillian driven_qubit(double Delta, double Omega, double kappa,
                         CompositeSpace& space_out) {
  space_out = CompositeSpace({2});
  SparseOperator s = annihilator(space_out, 0);
  SparseOperator h = Delta * number_operator(space_out, 0) +
                     Omega * (s + s.adjoint());
  std::vector<DissipatorSpec> diss = {{s, kappa}};
  return build_liouvillian(h, diss);
}

Liouvillian thermal_mode(int dim, double nbar, double kappa,
                         CompositeSpace& space_out) {
  space_out = CompositeSpace({dim});
  SparseOperator a = annihilator(space_out, 0);
  SparseOperator h = SparseOperator::zero(space_out);
  std::vector<DissipatorSpec> diss = {{a, (nbar + 1.0) * kappa},
                                      {a.adjoint(), nbar * kappa}};
  return build_liouvillian(h, diss);
}

SystemParams fig3_params(double Delta) {
  return SystemParams::constrained(Delta, 15.0, 40.0 / std::sqrt(2.0), 0.1,
                                   800.0, 0.05);
}

}  // namespace

TEST_SUITE_BEGIN("dynamics");

TEST_CASE("damped mode relaxes to vacuum") {
  CompositeSpace space;
  Liouvillian L = thermal_mode(12, 0.0, 1.0, space);
  DensityMatrix rho = steady_state(L);
  CHECK(std::abs(rho.matrix()(0, 0) - Complex(1.0)) < 1e-10);
  CHECK(rho.matrix().cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("thermal bath fixes occupation and super-Poissonian statistics") {
  CompositeSpace space;
  Liouvillian L = thermal_mode(30, 0.5, 1.0, space);
  DensityMatrix rho = steady_state(L);
  SparseOperator a = annihilator(space, 0);
  CHECK(mean_occupation(rho, a) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(g2_zero(rho, a) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("Lindblad generator preserves the trace") {
  CompositeSpace space = make_space(3);
  SystemParams p = fig3_params(32.0);
  SparseOperator h = build_effective_hamiltonian(p, space);
  Liouvillian L = build_liouvillian(h, build_dissipators(p, space));
  CHECK(L.side() == space.total_dim() * space.total_dim());
  CHECK(trace_preservation_defect(L) < 1e-10);
}

TEST_CASE("superoperator spectrum sits in the closed left half-plane") {
  CompositeSpace space;
  Liouvillian L = driven_qubit(2.0, 0.7, 1.0, space);
  Eigen::MatrixXcd dense(L.superoperator);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(dense);
  CHECK(es.eigenvalues().real().maxCoeff() < 1e-10);
}

TEST_CASE("driven qubit reproduces the optical Bloch steady state") {
  const double Delta = 2.0, Omega = 0.7, kappa = 1.0;
  CompositeSpace space;
  Liouvillian L = driven_qubit(Delta, Omega, kappa, space);
  DensityMatrix rho = steady_state(L);
  const double pe_expected =
      Omega * Omega / (Delta * Delta + kappa * kappa + 2.0 * Omega * Omega);
  CHECK(std::abs(rho.matrix()(1, 1).real() - pe_expected) < 1e-10);
  CHECK(std::abs(rho.matrix()(1, 1).imag()) < 1e-12);
}

TEST_CASE("g2(0) of reference states") {
  CompositeSpace space({6});
  SparseOperator a = annihilator(space, 0);
  DensityMatrix fock1 =
      DensityMatrix::from_pure(StateVector::basis_state(space, {1}));
  CHECK(g2_zero(fock1, a) == doctest::Approx(0.0).epsilon(1e-14));
  DensityMatrix fock2 =
      DensityMatrix::from_pure(StateVector::basis_state(space, {2}));
  CHECK(g2_zero(fock2, a) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS((void)g2_zero(DensityMatrix::vacuum(space), a),
                  std::runtime_error);
}

TEST_CASE("g2(tau) starts at g2(0) and decorrelates") {
  CompositeSpace space;
  Liouvillian L = thermal_mode(25, 0.4, 1.0, space);
  DensityMatrix rho = steady_state(L);
  SparseOperator a = annihilator(space, 0);
  std::vector<double> grid = linspace(0.0, 10.0, 51);
  G2TauSeries series = g2_tau(L, rho, a, grid);
  REQUIRE(series.tau.size() == grid.size());
  CHECK(std::abs(series.g2.front() - g2_zero(rho, a)) < 1e-9);
  CHECK(std::abs(series.g2.back() - 1.0) < 1e-3);
  // bunched light decays monotonically towards 1
  CHECK(series.g2.front() > series.g2[10]);
  CHECK(series.g2[10] > series.g2.back() - 1e-9);
}

TEST_CASE("frame rotation is exact for rotation eigenstates") {
  // Physical L has H = Delta n; the slow L drops it and declares
  // R = Delta n as the folded frame. Readout of the number-conserving
  // correlator must agree to rounding.
  const double Delta = 7.0, nbar = 0.3;
  CompositeSpace space({18});
  SparseOperator a = annihilator(space, 0);
  SparseOperator n = number_operator(space, 0);
  std::vector<DissipatorSpec> diss = {{a, 1.3}, {a.adjoint(), 0.3}};
  Liouvillian L_full = build_liouvillian(Delta * n, diss);
  Liouvillian L_slow = build_liouvillian(SparseOperator::zero(space), diss);
  (void)nbar;
  DensityMatrix rho = steady_state(L_full);
  std::vector<double> grid = linspace(0.0, 4.0, 21);
  SparseOperator frame = Delta * n;
  G2TauSeries direct = g2_tau(L_full, rho, a, grid);
  G2TauSeries folded = g2_tau(L_slow, rho, a, grid, &frame);
  for (size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(direct.g2[i] - folded.g2[i]) < 1e-7);
}

TEST_CASE("density evolution conserves trace and relaxes to the steady state") {
  CompositeSpace space;
  Liouvillian L = driven_qubit(1.0, 0.5, 1.0, space);
  DensityMatrix rho0 = DensityMatrix::vacuum(space);
  std::vector<double> grid = linspace(0.0, 25.0, 26);
  DensitySeries series = evolve_density(L, rho0, grid);
  for (double defect : series.trace_defect) CHECK(defect < 1e-8);
  DensityMatrix target = steady_state(L);
  CHECK((series.final.matrix() - target.matrix()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("unitary evolution: stationary phases and Rabi flopping") {
  SUBCASE("diagonal Hamiltonian leaves occupations frozen") {
    CompositeSpace space({3});
    SparseOperator h = 2.5 * number_operator(space, 0);
    Eigen::VectorXcd amps(3);
    amps << 0.6, 0.0, 0.8;
    StateVector psi0(space, amps);
    std::vector<double> grid = linspace(0.0, 8.0, 17);
    std::vector<long> track = {0, 2};
    SchrodingerSeries s = evolve_schrodinger(h, psi0, grid, track);
    CHECK(s.max_norm_defect < 1e-7);
    for (int i = 0; i < s.prob.rows(); ++i) {
      CHECK(std::abs(s.prob(i, 0) - 0.36) < 1e-7);
      CHECK(std::abs(s.prob(i, 1) - 0.64) < 1e-7);
    }
  }
  SUBCASE("resonant drive gives sin^2(Omega t)") {
    const double Omega = 0.9;
    CompositeSpace space({2});
    SparseOperator s_low = annihilator(space, 0);
    SparseOperator h = Omega * (s_low + s_low.adjoint());
    StateVector psi0 = StateVector::basis_state(space, {0});
    std::vector<double> grid = linspace(0.0, 6.0, 61);
    std::vector<long> track = {1};
    SchrodingerSeries s = evolve_schrodinger(h, psi0, grid, track);
    for (size_t i = 0; i < grid.size(); ++i) {
      const double expect = std::pow(std::sin(Omega * grid[i]), 2);
      CHECK(std::abs(s.prob(static_cast<int>(i), 0) - expect) < 1e-7);
    }
  }
}

TEST_CASE("amplitude equations relax onto their fixed point") {
  SystemParams p = fig3_params(24.0);
  std::array<Complex, 9> c0{};
  c0[kG000] = 1.0;
  std::vector<double> grid = linspace(0.0, 30.0, 31);
  AmplitudeSeries series = evolve_nonhermitian(p, c0, grid);
  REQUIRE(series.c.size() == grid.size());
  AmplitudeSet target = ode_fixed_point(p);
  for (int k = 0; k < 9; ++k)
    CHECK(std::abs(series.c.back()[k] - target.c[k]) < 1e-6);
  // the undriven system decays to the ground amplitude alone
  SystemParams p0 = p;
  p0.Omega_e = 0.0;
  std::array<Complex, 9> excited{};
  excited[kG000] = 1.0;
  excited[kE000] = 0.5;
  AmplitudeSeries decay = evolve_nonhermitian(p0, excited, grid);
  for (int k = 1; k < 9; ++k) CHECK(std::abs(decay.c.back()[k]) < 1e-10);
  CHECK(std::abs(decay.c.back()[kG000] - Complex(1.0)) < 1e-12);
}

TEST_CASE("Poisson reference zeroes the coherent-state histogram") {
  const Complex alpha(0.6, 0.2);
  CompositeSpace space({25});
  Eigen::VectorXcd amps(25);
  double logfact = 0.0;
  for (int n = 0; n < 25; ++n) {
    if (n > 0) logfact += std::log(static_cast<double>(n));
    amps[n] = std::pow(alpha, n) * std::exp(-0.5 * std::norm(alpha)) *
              std::exp(-0.5 * logfact);
  }
  StateVector psi(space, amps);
  psi.normalize();
  YHistogram h = y_of_N(DensityMatrix::from_pure(psi), 0);
  CHECK(h.mean == doctest::Approx(std::norm(alpha)).epsilon(1e-10));
  for (int n = 0; n < 6; ++n) {
    REQUIRE(h.defined[n]);
    CHECK(std::abs(h.y[n]) < 1e-8);
  }
}

TEST_CASE("iterative and direct solver paths agree") {
  CompositeSpace space = make_space(3);
  SystemParams p = fig3_params(32.0);
  SparseOperator h =
      build_effective_hamiltonian(p, space) - fast_frame_generator(p, space);
  Liouvillian L = build_liouvillian(h, build_dissipators(p, space));

  SteadyStateSolver direct_solver;  // side 2916 < direct_max_side
  DensityMatrix rho_direct = direct_solver.solve(L);
  CHECK(direct_solver.stats().direct);

  SteadyStateOptions opts;
  opts.direct_max_side = 100;
  SteadyStateSolver iterative(opts);
  DensityMatrix rho_iter = iterative.solve(L);
  CHECK(!iterative.stats().direct);
  CHECK(iterative.stats().preconditioner_builds >= 1);
  CHECK(iterative.stats().residual < 1e-8);
  CHECK((rho_direct.matrix() - rho_iter.matrix()).cwiseAbs().maxCoeff() <
        1e-8);

  // warm restart reuses the cached preconditioner
  const int builds = iterative.stats().preconditioner_builds;
  (void)iterative.solve(L);
  CHECK(iterative.stats().preconditioner_builds == builds);
}

TEST_SUITE_END();
