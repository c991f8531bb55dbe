#include "blockade/dynamics.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace boost::numeric::odeint {
// odeint's generic Eigen norm returns the scalar type, which for complex
// states does not convert to the double the error checker needs
template <int R, int C, int O, int MR, int MC>
struct vector_space_norm_inf<
    Eigen::Matrix<std::complex<double>, R, C, O, MR, MC>> {
  typedef double result_type;
  double operator()(
      const Eigen::Matrix<std::complex<double>, R, C, O, MR, MC>& m) const {
    return m.cwiseAbs().maxCoeff();
  }
};
}  // namespace boost::numeric::odeint

namespace blockade {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseMatrixXc kron(const SparseMatrixXc& a, const SparseMatrixXc& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(a.nonZeros()) * b.nonZeros());
  const long bn = b.rows();
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrixXc::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrixXc::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(ia.row() * bn + ib.row(), ia.col() * bn + ib.col(),
                         ia.value() * ib.value());
  SparseMatrixXc m(a.rows() * bn, a.cols() * bn);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

Liouvillian build_liouvillian(const SparseOperator& H,
                              std::span<const DissipatorSpec> dissipators) {
  const CompositeSpace& space = H.space();
  const long n = space.total_dim();
  SparseMatrixXc eye(n, n);
  eye.setIdentity();

  // vec(rho)[c*n + r] = rho(r, c): vec(A rho B) = (B^T (x) A) vec(rho)
  SparseMatrixXc L = Complex(0, -1) * (kron(eye, H.matrix()) -
                                       kron(SparseMatrixXc(H.matrix().transpose()), eye));
  for (const DissipatorSpec& d : dissipators) {
    if (d.op.space() != space)
      throw std::invalid_argument("build_liouvillian: dissipator space mismatch");
    const SparseMatrixXc& o = d.op.matrix();
    SparseMatrixXc nn = SparseMatrixXc(o.adjoint()) * o;
    L += d.rate * (2.0 * kron(SparseMatrixXc(o.conjugate()), o) -
                   kron(eye, nn) - kron(SparseMatrixXc(nn.transpose()), eye));
  }
  L.prune(Complex(0.0), 0.0);
  L.makeCompressed();
  return Liouvillian{space, std::move(L)};
}

double trace_preservation_defect(const Liouvillian& L) {
  const long n = L.space.total_dim();
  Eigen::VectorXcd colsum = Eigen::VectorXcd::Zero(L.side());
  for (int k = 0; k < L.superoperator.outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(L.superoperator, k); it; ++it)
      if (it.row() % (n + 1) == 0)  // trace positions d*n + d
        colsum[it.col()] += it.value();
  return colsum.cwiseAbs().maxCoeff();
}

Complex expectation(const DensityMatrix& rho, const SparseOperator& A) {
  if (rho.space() != A.space())
    throw std::invalid_argument("expectation: space mismatch");
  Complex acc = 0.0;
  for (int k = 0; k < A.matrix().outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(A.matrix(), k); it; ++it)
      acc += it.value() * rho.matrix()(it.col(), it.row());
  return acc;
}

double mean_occupation(const DensityMatrix& rho, const SparseOperator& c) {
  return expectation(rho, c.adjoint() * c).real();
}

double g2_zero(const DensityMatrix& rho_ss, const SparseOperator& c) {
  const SparseOperator cd = c.adjoint();
  const double n = expectation(rho_ss, cd * c).real();
  if (n < 1e-12)
    throw std::runtime_error("g2_zero: occupation below floor, correlator undefined");
  const double num = expectation(rho_ss, cd * cd * c * c).real();
  return num / (n * n);
}

// ---------------------------------------------------------------------------
// steady state

namespace {

// Row 0 of the superoperator replaced by the vectorized trace functional.
SparseMatrixXc trace_augmented(const Liouvillian& L) {
  const long n = L.space.total_dim();
  std::vector<Triplet> t;
  t.reserve(static_cast<size_t>(L.superoperator.nonZeros()) + n);
  for (int k = 0; k < L.superoperator.outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(L.superoperator, k); it; ++it)
      if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
  for (long d = 0; d < n; ++d) t.emplace_back(0, d * n + d, 1.0);
  SparseMatrixXc a(L.side(), L.side());
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

// BiCGSTAB with a fixed (possibly stale) preconditioner and an initial guess
// in x (pass a zero vector for a cold start). Returns the relative residual
// achieved; iteration count via out-parameter.
double bicgstab(const SparseMatrixXc& a, const Eigen::VectorXcd& rhs,
                const Eigen::IncompleteLUT<Complex>& prec, double tol,
                int max_iterations, Eigen::VectorXcd& x, int& iterations) {
  Eigen::VectorXcd r = rhs - a * x;
  Eigen::VectorXcd r0 = r, p = r, v, s, t, y, z;
  const double nb = rhs.norm();
  Complex rho = r0.dot(r), alpha = 1.0, w = 1.0;
  iterations = 0;
  double rel = r.norm() / nb;
  for (int it = 0; rel >= tol && it < max_iterations; ++it) {
    iterations = it + 1;
    y = prec.solve(p);
    v = a * y;
    const Complex r0v = r0.dot(v);
    if (std::abs(r0v) < 1e-300) break;  // breakdown
    alpha = rho / r0v;
    s = r - alpha * v;
    z = prec.solve(s);
    t = a * z;
    const Complex tt = t.dot(t);
    if (std::abs(tt) < 1e-300) break;
    w = t.dot(s) / tt;
    x += alpha * y + w * z;
    r = s - w * t;
    rel = r.norm() / nb;
    if (rel < tol) break;
    const Complex rho2 = r0.dot(r);
    if (std::abs(rho2) < 1e-300) break;
    const Complex beta = (rho2 / rho) * (alpha / w);
    rho = rho2;
    p = r + beta * (p - w * v);
  }
  rel = (a * x - rhs).norm() / nb;  // true residual, not the recursion's
  return rel;
}

}  // namespace

SteadyStateSolver::SteadyStateSolver(SteadyStateOptions opts) : opts_(opts) {}

void SteadyStateSolver::reset() {
  prec_.reset();
  prec_side_ = 0;
  prec_stale_ = false;
  last_x_.resize(0);
}

DensityMatrix SteadyStateSolver::solve(const Liouvillian& L) {
  const long n = L.space.total_dim();
  const long N = L.side();
  SparseMatrixXc a = trace_augmented(L);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(N);
  rhs[0] = 1.0;
  Eigen::VectorXcd x;
  stats_ = Stats{.preconditioner_builds = stats_.preconditioner_builds};

  if (N <= opts_.direct_max_side) {
    Eigen::SparseLU<SparseMatrixXc> lu(a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("steady_state: singular augmented system");
    x = lu.solve(rhs);
    stats_.direct = true;
    stats_.relative_residual = (a * x - rhs).norm();
  } else {
    auto rebuild = [&] {
      prec_ = std::make_unique<Eigen::IncompleteLUT<Complex>>();
      prec_->setDroptol(opts_.ilut_droptol);
      prec_->setFillfactor(opts_.ilut_fillfactor);
      prec_->compute(a);
      prec_side_ = N;
      prec_stale_ = false;
      ++stats_.preconditioner_builds;
    };
    if (!prec_ || prec_side_ != N || prec_stale_) rebuild();
    int it = 0;
    // warm start from the previous solve of a sweep neighbor when available
    x = last_x_.size() == N ? last_x_ : Eigen::VectorXcd::Zero(N);
    // cap the first attempt: a stale factorization is cheaper to replace than
    // to iterate against
    double rel = bicgstab(a, rhs, *prec_, opts_.tol,
                          std::min(opts_.max_iterations, 60), x, it);
    stats_.iterations = it;
    if (rel >= opts_.tol) {
      // stale preconditioner from an earlier parameter point in a sweep
      rebuild();
      rel = bicgstab(a, rhs, *prec_, opts_.tol, opts_.max_iterations, x, it);
      stats_.iterations += it;
    }
    // refresh eagerly once convergence starts to degrade
    prec_stale_ = it > 12;
    last_x_ = x;
    stats_.relative_residual = rel;
    if (rel >= opts_.tol)
      throw std::runtime_error(
          "steady_state: BiCGSTAB did not converge, relative residual " +
          std::to_string(rel));
  }

  DensityMatrix rho(L.space,
                    Eigen::Map<Eigen::MatrixXcd>(x.data(), n, n));
  rho.hermitize_and_normalize();
  if (opts_.floor_eigenvalues) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
    if (es.eigenvalues().minCoeff() < -1e-10) {
      Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
      rho.matrix() = es.eigenvectors() * ev.asDiagonal() *
                     es.eigenvectors().adjoint();
      rho.hermitize_and_normalize();
    }
  }
  stats_.residual =
      (L.superoperator *
       Eigen::Map<const Eigen::VectorXcd>(rho.matrix().data(), N))
          .norm();
  return rho;
}

DensityMatrix steady_state(const Liouvillian& L, SteadyStateOptions opts) {
  SteadyStateSolver solver(opts);
  return solver.solve(L);
}

// ---------------------------------------------------------------------------
// propagation

namespace {

namespace odeint = boost::numeric::odeint;

template <typename State, typename System, typename Observer>
void integrate_grid(System&& sys, State& state, std::span<const double> t_grid,
                    double rel_tol, double abs_tol, Observer&& obs) {
  if (t_grid.empty()) throw std::invalid_argument("empty time grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("time grid not strictly increasing");
  using Stepper = odeint::runge_kutta_dopri5<State, double, State, double,
                                             odeint::vector_space_algebra>;
  auto stepper = odeint::make_controlled(abs_tol, rel_tol, Stepper());
  double t = t_grid.front();
  obs(state, t);
  for (size_t i = 1; i < t_grid.size(); ++i) {
    const double t1 = t_grid[i];
    double dt = std::min(0.1, t1 - t);
    odeint::integrate_adaptive(stepper, sys, state, t, t1, dt);
    t = t1;
    obs(state, t);
  }
}

// tr(A X) with X given as vec, vec[c*n + r] = X(r, c)
Complex vec_trace_product(const SparseMatrixXc& a, const Eigen::VectorXcd& x,
                          long n) {
  Complex acc = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(a, k); it; ++it)
      acc += it.value() * x[it.row() * n + it.col()];
  return acc;
}

// same, with the exact frame rotation e^{-iR tau} X e^{iR tau} folded into
// the readout: X_phys(r, c) = e^{-i(d_r - d_c) tau} X(r, c)
Complex vec_trace_product_rotated(const SparseMatrixXc& a,
                                  const Eigen::VectorXcd& x, long n,
                                  const Eigen::VectorXd& diag, double tau) {
  Complex acc = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(a, k); it; ++it) {
      const long row = it.col();  // X entry picked by A(i,k) is X(k,i)
      const long col = it.row();
      const Complex phase =
          std::exp(Complex(0.0, -(diag[row] - diag[col]) * tau));
      acc += it.value() * phase * x[col * n + row];
    }
  return acc;
}

}  // namespace

G2TauSeries g2_tau(const Liouvillian& L, const DensityMatrix& rho_ss,
                   const SparseOperator& c, std::span<const double> tau_grid,
                   const SparseOperator* frame, double rel_tol, double abs_tol) {
  if (rho_ss.space() != L.space || c.space() != L.space)
    throw std::invalid_argument("g2_tau: space mismatch");
  const long n = L.space.total_dim();
  const SparseOperator cd = c.adjoint();
  const SparseMatrixXc nn = (cd * c).matrix();
  const double n_ss = expectation(rho_ss, cd * c).real();
  if (n_ss < 1e-12)
    throw std::runtime_error("g2_tau: occupation below floor, correlator undefined");

  Eigen::VectorXd frame_diag;
  if (frame) {
    if (frame->space() != L.space)
      throw std::invalid_argument("g2_tau: frame space mismatch");
    frame_diag = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < frame->matrix().outerSize(); ++k)
      for (SparseMatrixXc::InnerIterator it(frame->matrix(), k); it; ++it) {
        if (it.row() != it.col() || std::abs(it.value().imag()) > 1e-12)
          throw std::invalid_argument("g2_tau: frame generator must be real diagonal");
        frame_diag[it.row()] = it.value().real();
      }
  }

  Eigen::MatrixXcd x0m = c.matrix() * rho_ss.matrix() *
                         Eigen::MatrixXcd(cd.matrix());
  Eigen::VectorXcd x = Eigen::Map<Eigen::VectorXcd>(x0m.data(), n * n);

  const SparseMatrixXc& Lm = L.superoperator;
  auto sys = [&Lm](const Eigen::VectorXcd& v, Eigen::VectorXcd& dv, double) {
    dv = Lm * v;
  };

  G2TauSeries out;
  out.tau.reserve(tau_grid.size());
  out.g2.reserve(tau_grid.size());
  const double t0 = tau_grid.front();
  integrate_grid(sys, x, tau_grid, rel_tol, abs_tol,
                 [&](const Eigen::VectorXcd& v, double tau) {
                   const Complex num =
                       frame ? vec_trace_product_rotated(nn, v, n, frame_diag,
                                                         tau - t0)
                             : vec_trace_product(nn, v, n);
                   out.tau.push_back(tau);
                   out.g2.push_back(num.real() / (n_ss * n_ss));
                 });
  return out;
}

DensitySeries evolve_density(const Liouvillian& L, const DensityMatrix& rho0,
                             std::span<const double> t_grid, double rel_tol,
                             double abs_tol) {
  if (rho0.space() != L.space)
    throw std::invalid_argument("evolve_density: space mismatch");
  const long n = L.space.total_dim();
  Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(
      rho0.matrix().data(), n * n);
  const SparseMatrixXc& Lm = L.superoperator;
  auto sys = [&Lm](const Eigen::VectorXcd& v, Eigen::VectorXcd& dv, double) {
    dv = Lm * v;
  };
  DensitySeries out;
  integrate_grid(sys, x, t_grid, rel_tol, abs_tol,
                 [&](const Eigen::VectorXcd& v, double t) {
                   Complex tr = 0.0;
                   for (long d = 0; d < n; ++d) tr += v[d * n + d];
                   out.t.push_back(t);
                   out.trace_defect.push_back(std::abs(tr - Complex(1.0)));
                 });
  out.final = DensityMatrix(L.space, Eigen::Map<Eigen::MatrixXcd>(x.data(), n, n));
  return out;
}

SchrodingerSeries evolve_schrodinger(const SparseOperator& H,
                                     const StateVector& psi0,
                                     std::span<const double> t_grid,
                                     std::span<const StateVector> projectors,
                                     double rel_tol, double abs_tol) {
  if (psi0.space() != H.space())
    throw std::invalid_argument("evolve_schrodinger: space mismatch");
  for (const StateVector& phi : projectors)
    if (phi.space() != H.space())
      throw std::invalid_argument("evolve_schrodinger: projector space mismatch");
  double scale = 0.0;
  for (int k = 0; k < H.matrix().outerSize(); ++k)
    for (SparseMatrixXc::InnerIterator it(H.matrix(), k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  if (H.hermiticity_defect() > 1e-9 * (1.0 + scale))
    throw std::invalid_argument("evolve_schrodinger: H not Hermitian");
  if (std::abs(psi0.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_schrodinger: psi0 not normalized");

  Eigen::VectorXcd psi = psi0.amplitudes();
  const SparseMatrixXc& Hm = H.matrix();
  auto sys = [&Hm](const Eigen::VectorXcd& v, Eigen::VectorXcd& dv, double) {
    dv = Complex(0, -1) * (Hm * v);
  };
  SchrodingerSeries out;
  out.prob.resize(static_cast<long>(t_grid.size()),
                  static_cast<long>(projectors.size()));
  long row = 0;
  integrate_grid(sys, psi, t_grid, rel_tol, abs_tol,
                 [&](const Eigen::VectorXcd& v, double t) {
                   out.t.push_back(t);
                   for (size_t j = 0; j < projectors.size(); ++j)
                     out.prob(row, static_cast<long>(j)) =
                         std::norm(projectors[j].amplitudes().dot(v));
                   out.max_norm_defect =
                       std::max(out.max_norm_defect, std::abs(v.norm() - 1.0));
                   ++row;
                 });
  return out;
}

SchrodingerSeries evolve_schrodinger(const SparseOperator& H,
                                     const StateVector& psi0,
                                     std::span<const double> t_grid,
                                     std::span<const long> basis_indices,
                                     double rel_tol, double abs_tol) {
  std::vector<StateVector> projectors;
  projectors.reserve(basis_indices.size());
  for (long b : basis_indices) {
    if (b < 0 || b >= H.space().total_dim())
      throw std::out_of_range("evolve_schrodinger: basis index out of range");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(H.space().total_dim());
    v[b] = 1.0;
    projectors.emplace_back(H.space(), std::move(v));
  }
  return evolve_schrodinger(H, psi0, t_grid,
                            std::span<const StateVector>(projectors), rel_tol,
                            abs_tol);
}

AmplitudeSeries evolve_nonhermitian(const SystemParams& params,
                                    const std::array<Complex, 9>& c0,
                                    std::span<const double> t_grid,
                                    double rel_tol, double abs_tol) {
  params.validate();
  const Matrix9cd m = amplitude_equation_matrix(params, true, true);
  Vector9cd c;
  for (int i = 0; i < 9; ++i) c[i] = c0[i];
  auto sys = [&m](const Vector9cd& v, Vector9cd& dv, double) {
    dv = Complex(0, -1) * (m * v);
  };
  AmplitudeSeries out;
  integrate_grid(sys, c, t_grid, rel_tol, abs_tol,
                 [&](const Vector9cd& v, double t) {
                   out.t.push_back(t);
                   std::array<Complex, 9> snap;
                   for (int i = 0; i < 9; ++i) snap[i] = v[i];
                   out.c.push_back(snap);
                 });
  return out;
}

YHistogram y_of_N(const DensityMatrix& rho_ss, int subsystem, double floor) {
  YHistogram out;
  out.P = number_distribution(rho_ss, subsystem);
  const int d = static_cast<int>(out.P.size());
  for (int k = 0; k < d; ++k) out.mean += k * out.P[k];
  out.y = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(d, false);
  double log_fact = 0.0;
  for (int k = 0; k < d; ++k) {
    if (k > 0) log_fact += std::log(static_cast<double>(k));
    if (out.P[k] <= floor || out.mean <= 0.0) continue;
    const double log_pp = -out.mean + k * std::log(out.mean) - log_fact;
    out.y[k] = (std::log(out.P[k]) - log_pp) / std::log(10.0);
    out.defined[k] = true;
  }
  return out;
}

}  // namespace blockade
