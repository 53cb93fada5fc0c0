#include "wevbg/streamstats.hpp"

#include <cmath>

#include "wevbg/errors.hpp"

namespace wevbg {

ScatterState ScatterState::empty(Index dim) {
  return ScatterState{0, Vector::Zero(dim), Matrix::Zero(dim, dim)};
}

RankOneIncrement rank_one_increment(const ScatterState& state, const Vector& x) {
  if (state.n == 0) fail(ErrorKind::InsufficientHistory, "rank_one_increment needs at least one absorbed observation");
  if (x.size() != state.dim()) fail(ErrorKind::DimensionError, "rank_one_increment: observation length differs");
  const double n = static_cast<double>(state.n + 1);
  return {std::sqrt((n - 1.0) / n) * (x - state.mean)};
}

ScatterState welford_update(const ScatterState& state, const Vector& x) {
  if (x.size() != state.dim()) fail(ErrorKind::DimensionError, "welford_update: observation length differs");
  ScatterState next;
  next.n = state.n + 1;
  if (state.n == 0) {
    next.mean = x;
    next.scatter = Matrix::Zero(x.size(), x.size());
    return next;
  }
  const Vector delta = x - state.mean;
  next.mean = state.mean + delta / static_cast<double>(next.n);
  if (x.size() == 1) {
    next.scatter = state.scatter;
    next.scatter(0, 0) += delta[0] * (x[0] - next.mean[0]);
  } else {
    const Vector y = rank_one_increment(state, x).y;
    next.scatter = state.scatter;
    next.scatter.noalias() += y * y.transpose();
  }
  return next;
}

ScatterState batch_scatter(std::span<const Vector> frames) {
  if (frames.empty()) fail(ErrorKind::InsufficientData, "batch_scatter needs at least one frame");
  const Index dim = frames.front().size();
  Vector mean = Vector::Zero(dim);
  for (const auto& f : frames) {
    if (f.size() != dim) fail(ErrorKind::DimensionError, "batch_scatter: ragged frame lengths");
    mean += f;
  }
  mean /= static_cast<double>(frames.size());

  Matrix scatter = Matrix::Zero(dim, dim);
  for (const auto& f : frames) {
    const Vector d = f - mean;
    scatter.noalias() += d * d.transpose();
  }
  return ScatterState{frames.size(), std::move(mean), std::move(scatter)};
}

Vector column_mean(const Matrix& samples) {
  if (samples.cols() == 0) fail(ErrorKind::InsufficientData, "column_mean of an empty sample set");
  return samples.rowwise().mean();
}

PooledMoments combined_moments(std::size_t nb, const Vector& mu_b, const Vector& var_b, std::size_t nf,
                               const Vector& mu_f, const Vector& var_f) {
  if (nb + nf == 0) fail(ErrorKind::DegenerateInput, "combined_moments: both populations are empty");
  const Index dim = mu_b.size();
  if (var_b.size() != dim || mu_f.size() != dim || var_f.size() != dim) {
    fail(ErrorKind::DimensionError, "combined_moments: argument lengths differ");
  }
  if ((var_b.array() < 0.0).any() || (var_f.array() < 0.0).any()) {
    fail(ErrorKind::InvalidInput, "combined_moments: negative variance");
  }
  const double b = static_cast<double>(nb);
  const double f = static_cast<double>(nf);
  const double total = b + f;
  PooledMoments out;
  out.mean = (b * mu_b + f * mu_f) / total;
  out.variance = (b * var_b + f * var_f) / total +
                 (b * f / (total * total)) * (mu_b - mu_f).array().square().matrix();
  return out;
}

}  // namespace wevbg
