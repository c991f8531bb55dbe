#include "blockade/fock.hpp"

#include <cmath>

namespace blockade {

CompositeSpace::CompositeSpace(std::vector<int> dims, Layout layout)
    : dims_(std::move(dims)), layout_(layout) {
  if (dims_.empty()) throw std::invalid_argument("CompositeSpace: no subsystems");
  total_ = 1;
  for (int d : dims_) {
    if (d < 1) throw std::invalid_argument("CompositeSpace: dimension < 1");
    total_ *= d;
  }
  strides_.resize(dims_.size());
  long s = 1;
  for (int k = static_cast<int>(dims_.size()) - 1; k >= 0; --k) {
    strides_[k] = s;
    s *= dims_[k];
  }
}

long CompositeSpace::index(std::span<const int> occ) const {
  if (occ.size() != dims_.size())
    throw std::invalid_argument("CompositeSpace::index: wrong arity");
  long idx = 0;
  for (size_t k = 0; k < dims_.size(); ++k) {
    if (occ[k] < 0 || occ[k] >= dims_[k])
      throw std::out_of_range("CompositeSpace::index: occupation out of range");
    idx += occ[k] * strides_[k];
  }
  return idx;
}

std::vector<int> CompositeSpace::occupations(long index) const {
  if (index < 0 || index >= total_)
    throw std::out_of_range("CompositeSpace::occupations: index out of range");
  std::vector<int> occ(dims_.size());
  for (size_t k = 0; k < dims_.size(); ++k) {
    occ[k] = static_cast<int>(index / strides_[k]) % dims_[k];
  }
  return occ;
}

SparseOperator::SparseOperator(CompositeSpace space, SparseMatrixXc matrix)
    : space_(std::move(space)), mat_(std::move(matrix)) {
  if (mat_.rows() != space_.total_dim() || mat_.cols() != space_.total_dim())
    throw std::invalid_argument("SparseOperator: matrix side != space dimension");
}

SparseOperator SparseOperator::adjoint() const {
  return SparseOperator(space_, SparseMatrixXc(mat_.adjoint()));
}

double SparseOperator::hermiticity_defect() const {
  SparseMatrixXc d = mat_ - SparseMatrixXc(mat_.adjoint());
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(d, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

SparseOperator& SparseOperator::prune() {
  mat_.prune(Complex(0.0), 0.0);
  return *this;
}

SparseOperator SparseOperator::identity(const CompositeSpace& space) {
  SparseMatrixXc m(space.total_dim(), space.total_dim());
  m.setIdentity();
  return SparseOperator(space, std::move(m));
}

SparseOperator SparseOperator::zero(const CompositeSpace& space) {
  return SparseOperator(space, SparseMatrixXc(space.total_dim(), space.total_dim()));
}

namespace {
void require_same_space(const SparseOperator& a, const SparseOperator& b) {
  if (a.space() != b.space())
    throw std::invalid_argument("SparseOperator: space mismatch");
}
}  // namespace

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
  require_same_space(a, b);
  return SparseOperator(a.space(), SparseMatrixXc(a.matrix() + b.matrix()));
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
  require_same_space(a, b);
  return SparseOperator(a.space(), SparseMatrixXc(a.matrix() - b.matrix()));
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
  require_same_space(a, b);
  SparseMatrixXc m = a.matrix() * b.matrix();
  m.prune(Complex(0.0), 0.0);
  return SparseOperator(a.space(), std::move(m));
}

SparseOperator operator*(Complex c, const SparseOperator& a) {
  return SparseOperator(a.space(), SparseMatrixXc(c * a.matrix()));
}

SparseOperator operator*(double c, const SparseOperator& a) {
  return SparseOperator(a.space(), SparseMatrixXc(c * a.matrix()));
}

SparseOperator annihilator(const CompositeSpace& space, int subsystem) {
  if (subsystem < 0 || subsystem >= space.num_subsystems())
    throw std::out_of_range("annihilator: subsystem index out of range");
  const long n = space.total_dim();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(n);
  for (long i = 0; i < n; ++i) {
    std::vector<int> occ = space.occupations(i);
    const int level = occ[subsystem];
    if (level == 0) continue;
    occ[subsystem] = level - 1;
    trips.emplace_back(space.index(occ), i, std::sqrt(static_cast<double>(level)));
  }
  SparseMatrixXc m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(space, std::move(m));
}

SparseOperator creator(const CompositeSpace& space, int subsystem) {
  return annihilator(space, subsystem).adjoint();
}

SparseOperator number_operator(const CompositeSpace& space, int subsystem) {
  if (subsystem < 0 || subsystem >= space.num_subsystems())
    throw std::out_of_range("number_operator: subsystem index out of range");
  const long n = space.total_dim();
  std::vector<Eigen::Triplet<Complex>> trips;
  for (long i = 0; i < n; ++i) {
    const int level = space.occupations(i)[subsystem];
    if (level > 0) trips.emplace_back(i, i, static_cast<double>(level));
  }
  SparseMatrixXc m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return SparseOperator(space, std::move(m));
}

SparseOperator compose(std::span<const std::pair<SparseOperator, Complex>> terms) {
  if (terms.empty()) throw std::invalid_argument("compose: empty term list");
  SparseOperator acc = SparseOperator::zero(terms.front().first.space());
  for (const auto& [op, coeff] : terms) acc = acc + coeff * op;
  acc.prune();
  return acc;
}

StateVector::StateVector(CompositeSpace space, Eigen::VectorXcd amplitudes)
    : space_(std::move(space)), amps_(std::move(amplitudes)) {
  if (amps_.size() != space_.total_dim())
    throw std::invalid_argument("StateVector: length != space dimension");
}

StateVector& StateVector::normalize() {
  const double n = amps_.norm();
  if (n == 0.0) throw std::invalid_argument("StateVector::normalize: zero vector");
  amps_ /= n;
  return *this;
}

StateVector StateVector::basis_state(const CompositeSpace& space,
                                     std::span<const int> occ) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(space.total_dim());
  v[space.index(occ)] = 1.0;
  return StateVector(space, std::move(v));
}

StateVector operator*(const SparseOperator& op, const StateVector& psi) {
  if (op.space() != psi.space())
    throw std::invalid_argument("operator*: space mismatch");
  return StateVector(psi.space(), op.matrix() * psi.amplitudes());
}

DensityMatrix::DensityMatrix(CompositeSpace space, Eigen::MatrixXcd rho)
    : space_(std::move(space)), rho_(std::move(rho)) {
  if (rho_.rows() != space_.total_dim() || rho_.cols() != space_.total_dim())
    throw std::invalid_argument("DensityMatrix: side != space dimension");
}

DensityMatrix& DensityMatrix::hermitize_and_normalize() {
  rho_ = ((rho_ + rho_.adjoint()) / 2.0).eval();
  const double tr = rho_.trace().real();
  if (tr == 0.0)
    throw std::runtime_error("DensityMatrix: zero trace, cannot normalize");
  rho_ /= tr;
  return *this;
}

DensityMatrixCheck DensityMatrix::check() const {
  DensityMatrixCheck c;
  c.hermiticity_defect = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  c.trace_defect = std::abs(rho_.trace() - Complex(1.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      (rho_ + rho_.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  return DensityMatrix(psi.space(),
                       psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::vacuum(const CompositeSpace& space) {
  Eigen::MatrixXcd rho =
      Eigen::MatrixXcd::Zero(space.total_dim(), space.total_dim());
  rho(0, 0) = 1.0;
  return DensityMatrix(space, std::move(rho));
}

DensityMatrix DensityMatrix::thermal(const CompositeSpace& space, int subsystem,
                                     double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("thermal: nbar < 0");
  const long n = space.total_dim();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  // Geometric weights nbar^k / (1+nbar)^{k+1}, renormalized over the kept
  // levels of the truncated factor.
  const int d = space.dim(subsystem);
  std::vector<double> w(d);
  double z = 0.0;
  for (int k = 0; k < d; ++k) {
    w[k] = std::pow(nbar / (1.0 + nbar), k) / (1.0 + nbar);
    z += w[k];
  }
  std::vector<int> occ(space.num_subsystems(), 0);
  for (int k = 0; k < d; ++k) {
    occ[subsystem] = k;
    const long i = space.index(occ);
    rho(i, i) = w[k] / z;
  }
  return DensityMatrix(space, std::move(rho));
}

Eigen::VectorXd number_distribution(const DensityMatrix& state, int subsystem) {
  const CompositeSpace& space = state.space();
  if (subsystem < 0 || subsystem >= space.num_subsystems())
    throw std::out_of_range("number_distribution: subsystem out of range");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(space.dim(subsystem));
  for (long i = 0; i < space.total_dim(); ++i) {
    p[space.occupations(i)[subsystem]] += state.matrix()(i, i).real();
  }
  return p;
}

}  // namespace blockade
