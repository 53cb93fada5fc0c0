#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wevbg/linalg.hpp"

namespace wevbg {

/// Running count, mean and scatter (not covariance) of a vector stream.
/// The scatter is Sum (x_k - mu_n)(x_k - mu_n)^T; callers divide by n or n-1
/// themselves when they need a covariance.
struct ScatterState {
  std::size_t n = 0;
  Vector mean;
  Matrix scatter;

  static ScatterState empty(Index dim);
  Index dim() const noexcept { return mean.size(); }
};

/// y with S_n = S_{n-1} + y y^T for the observation that takes the count
/// from n-1 to n.
struct RankOneIncrement {
  Vector y;
};

/// One Welford step. For D > 1 the scatter is updated with the symmetric
/// rank-one form S + y y^T, so the result is exactly symmetric.
ScatterState welford_update(const ScatterState& state, const Vector& x);

/// y = sqrt((n-1)/n) (x - mu_{n-1}), where n = state.n + 1.
/// Throws InsufficientHistory for an empty state.
RankOneIncrement rank_one_increment(const ScatterState& state, const Vector& x);

/// Two-pass mean and scatter of a non-empty set of equal-length vectors.
ScatterState batch_scatter(std::span<const Vector> frames);

/// Arithmetic mean of the columns of `samples`.
Vector column_mean(const Matrix& samples);

struct PooledMoments {
  Vector mean;
  Vector variance;
};

/// Componentwise mean and (population) variance of the union of two
/// populations given their counts, means and variances.
PooledMoments combined_moments(std::size_t nb, const Vector& mu_b, const Vector& var_b, std::size_t nf,
                               const Vector& mu_f, const Vector& var_f);

}  // namespace wevbg
