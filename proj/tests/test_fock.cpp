#include <doctest.h>

#include "blockade/fock.hpp"

using namespace blockade;

TEST_SUITE_BEGIN("fock");

TEST_CASE("composite space indexing round-trips") {
  CompositeSpace space({2, 3, 3, 3});
  CHECK(space.total_dim() == 54);
  for (long i = 0; i < space.total_dim(); ++i)
    CHECK(space.index(space.occupations(i)) == i);
  CHECK(space.index({0, 0, 0, 0}) == 0);
  CHECK(space.index({1, 2, 2, 2}) == 53);
  CHECK_THROWS_AS((void)space.index({0, 3, 0, 0}), std::out_of_range);
}

TEST_CASE("annihilator lowers the phonon by sqrt(n)") {
  CompositeSpace space({2, 3, 3, 3});
  SparseOperator b = annihilator(space, 3);
  StateVector psi = StateVector::basis_state(space, {0, 0, 0, 1});
  StateVector lowered = b * psi;
  CHECK(lowered.amplitudes()[space.index({0, 0, 0, 0})] == Complex(1.0));
  CHECK(lowered.norm() == doctest::Approx(1.0));
  StateVector two = StateVector::basis_state(space, {0, 0, 0, 2});
  CHECK(std::abs((b * two).amplitudes()[space.index({0, 0, 0, 1})] -
                 std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("vacuum annihilation gives the zero vector") {
  CompositeSpace space({2, 3, 3, 3});
  StateVector vac = StateVector::basis_state(space, {0, 0, 0, 0});
  CHECK((annihilator(space, 1) * vac).norm() == 0.0);
}

TEST_CASE("[c, c'] is the identity below the truncation edge") {
  CompositeSpace space({5});
  SparseOperator c = annihilator(space, 0);
  Eigen::MatrixXcd comm =
      Eigen::MatrixXcd(c.matrix() * c.adjoint().matrix()) -
      Eigen::MatrixXcd(c.adjoint().matrix() * c.matrix());
  for (int n = 0; n < 4; ++n)  // n < N-1 sector
    CHECK(std::abs(comm(n, n) - Complex(1.0)) < 1e-15);
}

TEST_CASE("annihilator structure: N-1 entries per factor block, exact adjoint") {
  CompositeSpace space({2, 4});
  SparseOperator c = annihilator(space, 1);
  CHECK(c.matrix().nonZeros() == 2 * 3);
  SparseMatrixXc diff =
      creator(space, 1).matrix() - SparseMatrixXc(c.matrix().adjoint());
  CHECK(diff.norm() == 0.0);
}

TEST_CASE("qubit factor gives the lowering operator") {
  CompositeSpace space({2, 3, 3, 3});
  SparseOperator sigma = annihilator(space, 0);
  StateVector e = StateVector::basis_state(space, {1, 0, 0, 0});
  CHECK((sigma * e).amplitudes()[space.index({0, 0, 0, 0})] == Complex(1.0));
  CHECK((sigma * (sigma * e)).norm() == 0.0);
}

TEST_CASE("number operator eigenvalue on |g,2,0,0>") {
  CompositeSpace space({2, 3, 3, 3});
  SparseOperator n = creator(space, 1) * annihilator(space, 1);
  StateVector psi = StateVector::basis_state(space, {0, 2, 0, 0});
  CHECK(std::abs((n * psi).amplitudes()[space.index({0, 2, 0, 0})] -
                 Complex(2.0)) < 1e-15);
  // sqrt(n)*sqrt(n) vs n: equal only to rounding
  SparseMatrixXc d = n.matrix() - number_operator(space, 1).matrix();
  CHECK(d.norm() < 1e-14);
}

TEST_CASE("tri-linear coupling term is exactly Hermitian") {
  CompositeSpace space({2, 4, 4, 4});
  SparseOperator tri =
      creator(space, 1) * annihilator(space, 2) * annihilator(space, 3);
  SparseOperator h = tri + tri.adjoint();
  CHECK(h.hermiticity_defect() == 0.0);
}

TEST_CASE("compose builds linear combinations") {
  CompositeSpace space({3});
  std::vector<std::pair<SparseOperator, Complex>> terms = {
      {annihilator(space, 0), Complex(2.0)},
      {creator(space, 0), Complex(0.0, 1.0)}};
  SparseOperator lc = compose(terms);
  SparseMatrixXc expect = 2.0 * annihilator(space, 0).matrix() +
                          Complex(0, 1) * creator(space, 0).matrix();
  CHECK(SparseMatrixXc(lc.matrix() - expect).norm() == 0.0);
}

TEST_CASE("operators on different spaces refuse to combine") {
  CompositeSpace s1({2, 3}), s2({3, 2});
  CHECK_THROWS_AS(annihilator(s1, 0) + annihilator(s2, 0),
                  std::invalid_argument);
}

TEST_CASE("embedding commutes with composition for distinct subsystems") {
  CompositeSpace space({2, 3, 4});
  SparseOperator x = annihilator(space, 1) * creator(space, 2);
  SparseOperator y = creator(space, 2) * annihilator(space, 1);
  CHECK(SparseMatrixXc(x.matrix() - y.matrix()).norm() == 0.0);
}

TEST_CASE("number distribution of vacuum and of a thermal factor") {
  CompositeSpace space({2, 3, 3, 3});
  Eigen::VectorXd p = number_distribution(DensityMatrix::vacuum(space), 3);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == 0.0);

  const double nbar = 0.5;
  CompositeSpace mode({25});
  DensityMatrix th = DensityMatrix::thermal(mode, 0, nbar);
  Eigen::VectorXd q = number_distribution(th, 0);
  CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-10));
  // renormalized geometric weights
  for (int n = 0; n < 5; ++n)
    CHECK(q[n] == doctest::Approx(std::pow(nbar / (1 + nbar), n) / (1 + nbar))
                      .epsilon(1e-9));
  CHECK(q.minCoeff() >= -1e-12);
}

TEST_CASE("density matrix invariants") {
  CompositeSpace space({2, 3});
  StateVector psi = StateVector::basis_state(space, {1, 2});
  DensityMatrix rho = DensityMatrix::from_pure(psi);
  DensityMatrixCheck c = rho.check();
  CHECK(c.ok());
  rho.matrix() *= 3.0;
  rho.hermitize_and_normalize();
  CHECK(rho.check().ok());
}

TEST_SUITE_END();
