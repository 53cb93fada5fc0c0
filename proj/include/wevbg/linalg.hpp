#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace wevbg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dense real symmetric matrix. Construction validates symmetry (1e-12
/// absolute) and finiteness, so every instance in the program is usable by
/// the symmetric eigensolver without further checks.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix entries);

  /// Averages `entries` with its transpose before validating. Used for
  /// products such as X*X^T whose two triangles are computed separately.
  static SymMatrix symmetrized(const Matrix& entries);
  static SymMatrix zeros(Index dim);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& entries() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

/// Full eigenvector set of one block's frame stack. Pairs are sorted by
/// descending eigenvalue; values below 1e-10 * lambda_max are clamped to 0.
struct EigenBasis {
  Vector mean;
  std::vector<EigenPair> pairs;
  std::size_t source_rank = 0;  // number of frames the basis was built from

  Index dim() const noexcept { return mean.size(); }
  std::size_t size() const noexcept { return pairs.size(); }
  /// Count of pairs with a strictly positive (unclamped) eigenvalue.
  std::size_t nonzero_count() const;
};

// Jacobi settings.
inline constexpr double kJacobiRelativeTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;
// Relative level under which eigenvalues are treated as exactly zero.
inline constexpr double kEigenvalueClamp = 1e-10;
// Components with magnitude below this never decide the sign convention.
inline constexpr double kSignThreshold = 1e-10;

/// Flips `v` so that its first component with |v_i| > 1e-10 is positive.
void normalize_sign(Vector& v);

/// Eigendecomposition by cyclic Jacobi rotations. Pairs come back sorted by
/// descending eigenvalue with orthonormal, sign-normalized vectors.
std::vector<EigenPair> eig_sym(const SymMatrix& m);

/// Largest eigenvalue with its vector. Same algorithm as eig_sym.
EigenPair dominant_pair(const SymMatrix& m);

/// max |lambda| over the eigenvalues of m.
double spectral_norm(const SymMatrix& m);

/// u * v^T.
Matrix outer(const Vector& u, const Vector& v);

/// The one eigenvalue of u*v^T that can be non-zero, v . u.
double outer_nonzero_eigenvalue(const Vector& u, const Vector& v);

/// Eigenbasis of the D x D scatter X X^T computed through the n x n Gram
/// matrix X^T X. `centered` holds one mean-subtracted sample per column.
///
/// Pairs whose eigenvalue is clamped to zero have no image under X; they are
/// replaced by unit vectors from the orthogonal complement of the retained
/// ones (deterministic, canonical-basis Gram-Schmidt), so the basis always
/// has n pairs and every pair satisfies S v = lambda v.
EigenBasis snapshot_eigenbasis(const Matrix& centered, const Vector& mean);

/// Eigenbasis of an explicitly formed scatter matrix (D pairs).
EigenBasis direct_eigenbasis(const SymMatrix& scatter, const Vector& mean, std::size_t source_rank);

/// Picks the snapshot path when D > n and the direct D x D path otherwise.
EigenBasis eigenbasis_from_centered(const Matrix& centered, const Vector& mean);

/// X (X^T v): applies the scatter of `centered` without forming it.
Vector scatter_apply(const Matrix& centered, const Vector& v);

}  // namespace wevbg
