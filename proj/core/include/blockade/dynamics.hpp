#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/IterativeLinearSolvers>

#include "blockade/analytics.hpp"
#include "blockade/fock.hpp"
#include "blockade/model.hpp"

namespace blockade {

/// Vectorized Lindblad generator. Column-stacking convention:
/// vec(rho)[c*n + r] = rho(r, c), so
///   L = -i(I (x) H - H^T (x) I)
///       + sum_k gamma_k (2 conj(o_k) (x) o_k - I (x) o_k'o_k - (o_k'o_k)^T (x) I)
/// with the dissipator convention D[o]rho = 2 o rho o' - o'o rho - rho o'o.
struct Liouvillian {
  CompositeSpace space;
  SparseMatrixXc superoperator;  // side = space.total_dim()^2

  long side() const { return superoperator.rows(); }
};

Liouvillian build_liouvillian(const SparseOperator& H,
                              std::span<const DissipatorSpec> dissipators);

/// Max over superoperator columns of |sum of entries in trace rows|, i.e. the
/// max-norm of the functional tr . L. Zero (to rounding) for any Lindblad
/// generator: trace preservation.
double trace_preservation_defect(const Liouvillian& L);

/// tr(A rho) and <c'c> readouts.
Complex expectation(const DensityMatrix& rho, const SparseOperator& A);
double mean_occupation(const DensityMatrix& rho, const SparseOperator& c);

struct SteadyStateOptions {
  double tol = 1e-12;            // relative residual of the augmented solve
  int max_iterations = 500;      // BiCGSTAB iterations per preconditioner
  double ilut_droptol = 1e-3;
  int ilut_fillfactor = 8;
  long direct_max_side = 20000;  // SparseLU below this superoperator side
  bool floor_eigenvalues = true; // clip eigenvalues below -1e-10 and rescale
};

/// Solves L rho = 0 with the trace-1 constraint (superoperator row 0 replaced
/// by the vectorized trace functional, unit right-hand side). Small systems
/// are factorized directly; large ones use BiCGSTAB with an incomplete-LU
/// preconditioner that is cached between calls and rebuilt automatically when
/// the cached factorization stops converging (e.g. after a large parameter
/// step in a sweep). Throws on non-convergence.
class SteadyStateSolver {
 public:
  struct Stats {
    bool direct = false;
    int iterations = 0;              // total BiCGSTAB iterations of last solve
    int preconditioner_builds = 0;   // cumulative since construction/reset
    double relative_residual = 0.0;  // of the augmented system
    double residual = 0.0;           // ||L vec(rho)||_2 of the returned state
  };

  explicit SteadyStateSolver(SteadyStateOptions opts = {});

  DensityMatrix solve(const Liouvillian& L);
  const Stats& stats() const { return stats_; }
  /// Drops the cached preconditioner.
  void reset();

 private:
  SteadyStateOptions opts_;
  Stats stats_;
  std::unique_ptr<Eigen::IncompleteLUT<Complex>> prec_;
  long prec_side_ = 0;
  bool prec_stale_ = false;  // refresh before the next solve
  Eigen::VectorXcd last_x_;  // warm start for parameter sweeps
};

/// One-shot convenience wrapper (no preconditioner reuse).
DensityMatrix steady_state(const Liouvillian& L, SteadyStateOptions opts = {});

/// g_i^2(0) = tr(c'c'cc rho) / tr(c'c rho)^2. Throws when the occupation is
/// below the 1e-12 floor (undefined correlator).
double g2_zero(const DensityMatrix& rho_ss, const SparseOperator& c);

struct G2TauSeries {
  std::vector<double> tau;
  std::vector<double> g2;
};

/// Quantum-regression evaluation of
/// g^2(tau) = <c'(0) c'(tau) c(tau) c(0)> / <c'c>^2:
/// propagates X(0) = c rho_ss c' under L, reads out tr(c'c X(tau)).
///
/// `frame` optionally names a diagonal Hermitian generator R such that the
/// physical Liouvillian is the given L plus the rotation part of R (the two
/// commute when R generates a symmetry of H and of every dissipation
/// channel). The propagation then runs in the slow frame and the exact
/// rotation X -> e^{-iR tau} X e^{iR tau} is applied analytically before each
/// readout, which is what makes bare-mode correlators (oscillating at the
/// fast 2 G_m scale) affordable.
G2TauSeries g2_tau(const Liouvillian& L, const DensityMatrix& rho_ss,
                   const SparseOperator& c, std::span<const double> tau_grid,
                   const SparseOperator* frame = nullptr,
                   double rel_tol = 1e-9, double abs_tol = 1e-12);

struct DensitySeries {
  std::vector<double> t;
  std::vector<double> trace_defect;  // |tr(rho(t)) - 1|
  DensityMatrix final;
};

/// Integrates rho' = L rho over the grid. Used as the solver-path cross-check
/// for steady_state and for relaxation studies.
DensitySeries evolve_density(const Liouvillian& L, const DensityMatrix& rho0,
                             std::span<const double> t_grid,
                             double rel_tol = 1e-9, double abs_tol = 1e-12);

struct SchrodingerSeries {
  std::vector<double> t;
  Eigen::MatrixXd prob;  // t.size() rows, one column per tracked basis index
  double max_norm_defect = 0.0;
};

/// Unitary evolution psi' = -iH psi; returns |<basis_k|psi(t)>|^2 series for
/// the designated flat basis indices. Requires H Hermitian and psi0
/// normalized.
SchrodingerSeries evolve_schrodinger(const SparseOperator& H,
                                     const StateVector& psi0,
                                     std::span<const double> t_grid,
                                     std::span<const long> basis_indices,
                                     double rel_tol = 1e-9,
                                     double abs_tol = 1e-12);

/// As above but projecting onto arbitrary states |phi_k> instead of flat
/// basis kets (needed when the tracked labels are superpositions in the
/// evolving layout, e.g. supermode occupation states under the bare-layout
/// Hamiltonian).
SchrodingerSeries evolve_schrodinger(const SparseOperator& H,
                                     const StateVector& psi0,
                                     std::span<const double> t_grid,
                                     std::span<const StateVector> projectors,
                                     double rel_tol = 1e-9,
                                     double abs_tol = 1e-12);

struct AmplitudeSeries {
  std::vector<double> t;
  std::vector<std::array<Complex, 9>> c;  // kWeakDriveState ordering
};

/// Integrates the nine weak-drive amplitude equations i dC/dt = M C with the
/// non-Hermitian generator of amplitude_equation_matrix(drive, decay).
AmplitudeSeries evolve_nonhermitian(const SystemParams& params,
                                    const std::array<Complex, 9>& c0,
                                    std::span<const double> t_grid,
                                    double rel_tol = 1e-9,
                                    double abs_tol = 1e-12);

struct YHistogram {
  Eigen::VectorXd P;          // P(N), marginal of the subsystem
  Eigen::VectorXd y;          // log10(P(N)/P_poisson(N)); NaN where undefined
  std::vector<bool> defined;  // P(N) above the probability floor
  double mean = 0.0;          // realized <N>, also the Poisson parameter
};

/// y(N) = log10 P(N)/P_p(N) against the Poisson reference with the realized
/// mean occupation of the same subsystem.
YHistogram y_of_N(const DensityMatrix& rho_ss, int subsystem,
                  double floor = 1e-14);

}  // namespace blockade
