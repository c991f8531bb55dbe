#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace blockade {

using Complex = std::complex<double>;
using SparseMatrixXc = Eigen::SparseMatrix<Complex>;

/// Tags which mode convention the middle two bosonic factors use. Operators
/// built for one layout must not be applied to states of the other.
enum class Layout { Bare, Supermode };

/// Truncated composite Hilbert space: an ordered list of subsystem dimensions.
/// Convention for the four-partite system: [qubit, a_+, a_-, b] (supermode
/// layout) or [qubit, a, m, b] (bare layout). A bosonic dimension of N keeps
/// Fock levels |0>..|N-1>.
class CompositeSpace {
 public:
  CompositeSpace() = default;
  CompositeSpace(std::vector<int> dims, Layout layout = Layout::Supermode);

  const std::vector<int>& dims() const { return dims_; }
  int dim(int subsystem) const { return dims_.at(subsystem); }
  int num_subsystems() const { return static_cast<int>(dims_.size()); }
  Layout layout() const { return layout_; }
  long total_dim() const { return total_; }

  /// Flat basis index of the product state with the given occupations
  /// (row-major, first subsystem slowest).
  long index(std::span<const int> occupations) const;
  long index(std::initializer_list<int> occ) const {
    return index(std::span<const int>(occ.begin(), occ.size()));
  }
  /// Occupation numbers of the flat basis index.
  std::vector<int> occupations(long index) const;

  bool operator==(const CompositeSpace& other) const {
    return dims_ == other.dims_ && layout_ == other.layout_;
  }
  bool operator!=(const CompositeSpace& other) const { return !(*this == other); }

 private:
  std::vector<int> dims_;
  std::vector<long> strides_;
  Layout layout_ = Layout::Supermode;
  long total_ = 0;
};

/// Sparse complex operator tagged with its space. Arithmetic between
/// operators on different spaces throws.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(CompositeSpace space, SparseMatrixXc matrix);

  const CompositeSpace& space() const { return space_; }
  const SparseMatrixXc& matrix() const { return mat_; }
  SparseMatrixXc& matrix() { return mat_; }

  SparseOperator adjoint() const;
  /// Max elementwise |M - M^dagger|; zero for operators Hermitian by
  /// construction.
  double hermiticity_defect() const;
  /// Drops stored entries that are exactly zero.
  SparseOperator& prune();

  static SparseOperator identity(const CompositeSpace& space);
  static SparseOperator zero(const CompositeSpace& space);

  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
  friend SparseOperator operator*(Complex c, const SparseOperator& a);
  friend SparseOperator operator*(double c, const SparseOperator& a);

 private:
  CompositeSpace space_;
  SparseMatrixXc mat_;
};

/// Annihilation operator of the given subsystem embedded in the full
/// tensor-product space. For the dim-2 qubit factor this is the lowering
/// operator sigma = |g><e|.
SparseOperator annihilator(const CompositeSpace& space, int subsystem);
SparseOperator creator(const CompositeSpace& space, int subsystem);
SparseOperator number_operator(const CompositeSpace& space, int subsystem);

/// Linear combination sum_k coeff_k * op_k. All operands must share a space.
SparseOperator compose(std::span<const std::pair<SparseOperator, Complex>> terms);

class StateVector {
 public:
  StateVector() = default;
  StateVector(CompositeSpace space, Eigen::VectorXcd amplitudes);

  const CompositeSpace& space() const { return space_; }
  const Eigen::VectorXcd& amplitudes() const { return amps_; }
  Eigen::VectorXcd& amplitudes() { return amps_; }
  double norm() const { return amps_.norm(); }
  StateVector& normalize();

  static StateVector basis_state(const CompositeSpace& space,
                                 std::span<const int> occupations);
  static StateVector basis_state(const CompositeSpace& space,
                                 std::initializer_list<int> occ) {
    return basis_state(space, std::span<const int>(occ.begin(), occ.size()));
  }

 private:
  CompositeSpace space_;
  Eigen::VectorXcd amps_;
};

StateVector operator*(const SparseOperator& op, const StateVector& psi);

struct DensityMatrixCheck {
  double hermiticity_defect = 0.0;   // max elementwise |rho - rho^dagger|
  double trace_defect = 0.0;         // |tr(rho) - 1|
  double min_eigenvalue = 0.0;
  bool ok(double herm_tol = 1e-12, double trace_tol = 1e-10,
          double psd_tol = -1e-10) const {
    return hermiticity_defect <= herm_tol && trace_defect <= trace_tol &&
           min_eigenvalue >= psd_tol;
  }
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(CompositeSpace space, Eigen::MatrixXcd rho);

  const CompositeSpace& space() const { return space_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }
  Eigen::MatrixXcd& matrix() { return rho_; }

  Complex trace() const { return rho_.trace(); }
  /// Projects onto the Hermitian part and rescales to unit trace.
  DensityMatrix& hermitize_and_normalize();
  DensityMatrixCheck check() const;

  static DensityMatrix from_pure(const StateVector& psi);
  static DensityMatrix vacuum(const CompositeSpace& space);
  /// Product state: thermal occupation nbar on `subsystem`, vacuum elsewhere.
  static DensityMatrix thermal(const CompositeSpace& space, int subsystem,
                               double nbar);

 private:
  CompositeSpace space_;
  Eigen::MatrixXcd rho_;
};

/// Marginal occupation-number probabilities of one subsystem.
Eigen::VectorXd number_distribution(const DensityMatrix& state, int subsystem);

}  // namespace blockade
