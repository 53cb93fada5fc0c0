#include "wevbg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wevbg/errors.hpp"

namespace wevbg {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

void validate(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    fail(ErrorKind::InvalidMatrix, "matrix must be square and non-empty");
  }
  if (!m.allFinite()) fail(ErrorKind::InvalidMatrix, "matrix has non-finite entries");
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance) {
        fail(ErrorKind::InvalidMatrix, "matrix is not symmetric");
      }
    }
  }
}

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// Zeroes a(p,q) with one Jacobi rotation (Golub & Van Loan, sym.schur2) and
// accumulates the rotation into v.
void rotate(Matrix& a, Matrix& v, Index p, Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

// Clamps tiny (or slightly negative) eigenvalues to exactly zero.
void clamp_values(std::vector<EigenPair>& pairs) {
  const double lambda_max = pairs.empty() ? 0.0 : std::max(pairs.front().value, 0.0);
  for (auto& p : pairs) {
    if (p.value < kEigenvalueClamp * lambda_max || lambda_max == 0.0) p.value = 0.0;
  }
}

// Orthogonalizes `v` against the first `count` vectors of `basis` (two passes
// of modified Gram-Schmidt) and returns the remaining norm.
double orthogonalize(Vector& v, const std::vector<EigenPair>& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < count; ++i) v -= basis[i].vector.dot(v) * basis[i].vector;
  }
  return v.norm();
}

}  // namespace

SymMatrix::SymMatrix(Matrix entries) : m_(std::move(entries)) { validate(m_); }

SymMatrix SymMatrix::symmetrized(const Matrix& entries) {
  if (entries.rows() != entries.cols()) fail(ErrorKind::InvalidMatrix, "matrix must be square");
  return SymMatrix(0.5 * (entries + entries.transpose()));
}

SymMatrix SymMatrix::zeros(Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

std::size_t EigenBasis::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const EigenPair& p) { return p.value > 0.0; }));
}

void normalize_sign(Vector& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kSignThreshold) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

std::vector<EigenPair> eig_sym(const SymMatrix& m) {
  const Index n = m.dim();
  Matrix a = m.entries();
  Matrix v = Matrix::Identity(n, n);

  const double threshold = kJacobiRelativeTolerance * a.norm();
  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (sweep++ == kJacobiMaxSweeps) {
      fail(ErrorKind::InvalidMatrix, "Jacobi iteration did not converge");
    }
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) rotate(a, v, p, q);
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

  std::vector<EigenPair> pairs;
  pairs.reserve(order.size());
  for (Index idx : order) {
    EigenPair pair{a(idx, idx), v.col(idx)};
    pair.vector.normalize();
    normalize_sign(pair.vector);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

EigenPair dominant_pair(const SymMatrix& m) { return eig_sym(m).front(); }

double spectral_norm(const SymMatrix& m) {
  double best = 0.0;
  for (const auto& p : eig_sym(m)) best = std::max(best, std::abs(p.value));
  return best;
}

Matrix outer(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) fail(ErrorKind::DimensionError, "outer: vector lengths differ");
  return u * v.transpose();
}

double outer_nonzero_eigenvalue(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) fail(ErrorKind::DimensionError, "outer_nonzero_eigenvalue: vector lengths differ");
  if (u.isZero(0.0) || v.isZero(0.0)) fail(ErrorKind::DegenerateInput, "outer_nonzero_eigenvalue: zero vector");
  return v.dot(u);
}

Vector scatter_apply(const Matrix& centered, const Vector& v) {
  return centered * (centered.transpose() * v);
}

EigenBasis snapshot_eigenbasis(const Matrix& centered, const Vector& mean) {
  const Index dim = centered.rows();
  const Index n = centered.cols();
  if (n < 2) fail(ErrorKind::InsufficientData, "snapshot_eigenbasis needs at least two samples");
  if (mean.size() != dim) fail(ErrorKind::DimensionError, "snapshot_eigenbasis: mean length differs from data");

  const SymMatrix gram = SymMatrix::symmetrized(centered.transpose() * centered);
  std::vector<EigenPair> gram_pairs = eig_sym(gram);
  clamp_values(gram_pairs);

  EigenBasis basis;
  basis.mean = mean;
  basis.source_rank = static_cast<std::size_t>(n);

  for (const auto& gp : gram_pairs) {
    if (gp.value <= 0.0) break;
    Vector image = centered * gp.vector;
    image.normalize();
    orthogonalize(image, basis.pairs, basis.pairs.size());
    const double norm = image.norm();
    if (norm < 0.5) break;  // lost to roundoff; treat the remainder as null
    image /= norm;
    normalize_sign(image);
    basis.pairs.push_back({gp.value, std::move(image)});
  }

  // Complete with null-space directions up to n pairs.
  const std::size_t target = static_cast<std::size_t>(std::min(n, dim));
  for (Index e = 0; e < dim && basis.pairs.size() < target; ++e) {
    Vector candidate = Vector::Unit(dim, e);
    const double norm = orthogonalize(candidate, basis.pairs, basis.pairs.size());
    if (norm < 0.5) continue;
    candidate /= norm;
    normalize_sign(candidate);
    basis.pairs.push_back({0.0, std::move(candidate)});
  }
  return basis;
}

EigenBasis direct_eigenbasis(const SymMatrix& scatter, const Vector& mean, std::size_t source_rank) {
  if (mean.size() != scatter.dim()) fail(ErrorKind::DimensionError, "direct_eigenbasis: mean length differs");
  EigenBasis basis;
  basis.mean = mean;
  basis.source_rank = source_rank;
  basis.pairs = eig_sym(scatter);
  clamp_values(basis.pairs);
  return basis;
}

EigenBasis eigenbasis_from_centered(const Matrix& centered, const Vector& mean) {
  if (centered.cols() < 2) fail(ErrorKind::InsufficientData, "eigenbasis needs at least two samples");
  if (centered.rows() > centered.cols()) return snapshot_eigenbasis(centered, mean);
  return direct_eigenbasis(SymMatrix::symmetrized(centered * centered.transpose()), mean,
                           static_cast<std::size_t>(centered.cols()));
}

}  // namespace wevbg
