#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "blockade/model.hpp"

using namespace blockade;

namespace {

SystemParams fig2_params(double Delta) {
  return SystemParams::constrained(Delta, 5.0, 6.0 / std::sqrt(2.0), 0.1,
                                   200.0);
}

SystemParams fig3_params(double Delta) {
  return SystemParams::constrained(Delta, 15.0, 40.0 / std::sqrt(2.0), 0.1,
                                   800.0, 0.05);
}

Complex element(const SparseOperator& op, const std::vector<int>& bra,
                const std::vector<int>& ket) {
  const CompositeSpace& s = op.space();
  return Eigen::MatrixXcd(op.matrix())(s.index(bra), s.index(ket));
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("constrained parameters honor the resonance conditions") {
  SystemParams p = fig3_params(7.0);
  CHECK(p.omega_m == p.omega_c);
  CHECK(p.omega_b == 2.0 * p.G_m);
  CHECK(p.Delta() == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(p.Delta_a() == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(p.eta() == doctest::Approx(15.0).epsilon(1e-15));
  CHECK(p.eta_a() == doctest::Approx(40.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_NOTHROW(p.validate());
  p.kappa = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("full Hamiltonian with zero couplings is the free diagonal") {
  SystemParams p;
  p.omega_c = 1.0;
  p.omega_m = 1.0;
  p.omega_b = 2.0;
  CompositeSpace space = make_space(3, Layout::Bare);
  SparseOperator h = build_full_hamiltonian(p, space);
  SparseOperator expect = number_operator(space, 1) +
                          number_operator(space, 2) +
                          2.0 * number_operator(space, 3);
  CHECK(SparseMatrixXc(h.matrix() - expect.matrix()).norm() < 1e-14);
}

TEST_CASE("full Hamiltonian is Hermitian and carries the beam splitter") {
  SystemParams p = fig2_params(5.0);
  CompositeSpace space = make_space(3, Layout::Bare);
  SparseOperator h = build_full_hamiltonian(p, space);
  CHECK(h.hermiticity_defect() < 1e-12);
  CHECK(std::abs(element(h, {0, 1, 0, 0}, {0, 0, 1, 0}) - Complex(p.G_m)) <
        1e-12);
  // optomechanical term g a'a (b + b')
  CHECK(std::abs(element(h, {0, 1, 0, 1}, {0, 1, 0, 0}) - Complex(p.g)) <
        1e-12);
  // atom drive
  CHECK(std::abs(element(h, {1, 0, 0, 0}, {0, 0, 0, 0}) - Complex(p.Omega_e)) <
        1e-12);
}

TEST_CASE("effective Hamiltonian matrix elements at the printed couplings") {
  SystemParams p = fig3_params(10.0);
  CompositeSpace space = make_space(3);
  SparseOperator h = build_effective_hamiltonian(p, space);
  CHECK(h.hermiticity_defect() < 1e-12);
  CHECK(std::abs(element(h, {0, 1, 0, 0}, {1, 0, 0, 0}) -
                 Complex(28.284271247461902)) < 1e-12);
  CHECK(std::abs(element(h, {0, 1, 0, 0}, {0, 0, 1, 1}) - Complex(-15.0)) <
        1e-12);
  // diagonal: Delta n_+ + (Delta - 2G_m) n_- + 2 G_m n_b + Delta n_sigma
  CHECK(std::abs(element(h, {0, 1, 0, 0}, {0, 1, 0, 0}) - Complex(10.0)) <
        1e-12);
  CHECK(std::abs(element(h, {0, 0, 1, 1}, {0, 0, 1, 1}) - Complex(10.0)) <
        1e-12);
  CHECK(std::abs(element(h, {1, 0, 0, 0}, {1, 0, 0, 0}) - Complex(10.0)) <
        1e-12);
}

TEST_CASE("fast frame generator removes the 2G_m diagonal only") {
  SystemParams p = fig3_params(10.0);
  CompositeSpace space = make_space(3);
  SparseOperator r = fast_frame_generator(p, space);
  SparseOperator expect =
      2.0 * p.G_m * (number_operator(space, 3) - number_operator(space, 2));
  CHECK(SparseMatrixXc(r.matrix() - expect.matrix()).norm() < 1e-12);
  // the slow Hamiltonian has a pure Delta(n_+ + n_- + n_sigma) diagonal
  SparseOperator slow = build_effective_hamiltonian(p, space) - r;
  CHECK(std::abs(element(slow, {0, 0, 1, 1}, {0, 0, 1, 1}) - Complex(10.0)) <
        1e-12);
  CHECK(std::abs(element(slow, {0, 0, 2, 2}, {0, 0, 2, 2}) - Complex(20.0)) <
        1e-12);
}

TEST_CASE("dissipator list: channels, rates, thermal split") {
  CompositeSpace space = make_space(3);
  SUBCASE("no phonon decay") {
    SystemParams p = fig2_params(1.0);
    auto d = build_dissipators(p, space);
    CHECK(d.size() == 3);
    for (const auto& spec : d) CHECK(spec.rate == doctest::Approx(1.0));
  }
  SUBCASE("thermal phonon bath") {
    SystemParams p =
        SystemParams::constrained(1.0, 15.0, 28.0, 0.1, 800.0, 0.05, 1.0);
    auto d = build_dissipators(p, space);
    REQUIRE(d.size() == 5);
    CHECK(d[3].rate == doctest::Approx(0.1));   // (n_th + 1) kappa_b
    CHECK(d[4].rate == doctest::Approx(0.05));  // n_th kappa_b
    // gain channel is the creator
    SparseMatrixXc diff =
        d[4].op.matrix() - SparseMatrixXc(d[3].op.matrix().adjoint());
    CHECK(diff.norm() == 0.0);
  }
}

TEST_CASE("bare mode operators satisfy the supermode identities") {
  CompositeSpace space = make_space(4);
  BareModeOperators ops = bare_mode_operators(space);
  SparseOperator np = number_operator(space, 1), nm = number_operator(space, 2);
  SparseOperator total =
      ops.a.adjoint() * ops.a + ops.m.adjoint() * ops.m - (np + nm);
  CHECK(SparseMatrixXc(total.matrix()).norm() < 1e-12);
  // [a, m'] = 0 away from the truncation edge
  Eigen::MatrixXcd comm =
      Eigen::MatrixXcd(ops.a.matrix() * ops.m.adjoint().matrix()) -
      Eigen::MatrixXcd(ops.m.adjoint().matrix() * ops.a.matrix());
  StateVector probe = StateVector::basis_state(space, {0, 1, 1, 0});
  CHECK((comm * probe.amplitudes()).norm() < 1e-12);
}

TEST_CASE("excitation weight commutes with the undriven effective H") {
  SystemParams p = fig3_params(17.0);
  p.Omega_e = 0.0;
  CompositeSpace space = make_space(4);
  SparseOperator h = build_effective_hamiltonian(p, space);
  SparseOperator sigma_n = number_operator(space, 0);
  SparseOperator weight = 2.0 * number_operator(space, 1) +
                          number_operator(space, 2) +
                          number_operator(space, 3) + 2.0 * sigma_n;
  SparseMatrixXc comm =
      h.matrix() * weight.matrix() - weight.matrix() * h.matrix();
  CHECK(comm.norm() < 1e-10);
}

TEST_CASE("supermode states diagonalize the bare beam splitter") {
  SystemParams p = SystemParams::constrained(5.0, 0.0, 0.0, 0.0, 3.0);
  CompositeSpace bare = make_space(4, Layout::Bare);
  SparseOperator h = build_full_hamiltonian(p, bare);
  const double delta = p.delta();

  StateVector plus = supermode_state_in_bare(bare, 0, 1, 0, 0);
  Eigen::VectorXcd residual =
      h.matrix() * plus.amplitudes() - (delta + p.G_m) * plus.amplitudes();
  CHECK(residual.norm() < 1e-12);

  StateVector minus = supermode_state_in_bare(bare, 0, 0, 1, 0);
  residual =
      h.matrix() * minus.amplitudes() - (delta - p.G_m) * minus.amplitudes();
  CHECK(residual.norm() < 1e-12);
}

TEST_CASE("supermode states in the bare layout have the textbook weights") {
  CompositeSpace bare = make_space(4, Layout::Bare);
  const double s = 1.0 / std::sqrt(2.0);

  StateVector one_plus = supermode_state_in_bare(bare, 0, 1, 0, 0);
  CHECK(std::abs(one_plus.amplitudes()[bare.index({0, 1, 0, 0})] - Complex(s)) <
        1e-14);
  CHECK(std::abs(one_plus.amplitudes()[bare.index({0, 0, 1, 0})] - Complex(s)) <
        1e-14);

  StateVector two_plus = supermode_state_in_bare(bare, 0, 2, 0, 0);
  CHECK(std::abs(two_plus.amplitudes()[bare.index({0, 2, 0, 0})] -
                 Complex(0.5)) < 1e-14);
  CHECK(std::abs(two_plus.amplitudes()[bare.index({0, 1, 1, 0})] - Complex(s)) <
        1e-14);
  CHECK(std::abs(two_plus.amplitudes()[bare.index({0, 0, 2, 0})] -
                 Complex(0.5)) < 1e-14);
  CHECK(two_plus.norm() == doctest::Approx(1.0).epsilon(1e-13));

  StateVector onep_onem = supermode_state_in_bare(bare, 0, 1, 1, 0);
  // (a'+m')(a'-m')/2 |0> = (a'^2 - m'^2)/2 |0>
  CHECK(std::abs(onep_onem.amplitudes()[bare.index({0, 2, 0, 0})] - Complex(s)) <
        1e-14);
  CHECK(std::abs(onep_onem.amplitudes()[bare.index({0, 0, 2, 0})] -
                 Complex(-s)) < 1e-14);
  CHECK(std::abs(onep_onem.amplitudes()[bare.index({0, 1, 1, 0})]) < 1e-14);
}

TEST_SUITE_END();
