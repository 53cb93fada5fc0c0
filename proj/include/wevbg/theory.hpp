#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wevbg/image.hpp"
#include "wevbg/linalg.hpp"
#include "wevbg/rng.hpp"

namespace wevbg {

/// Two Gaussian pixel processes: background (small spread) and foreground
/// (large spread), each with independent per-component deviations.
struct TwoClassParams {
  Vector mu_b;
  Vector mu_f;
  Vector sigma_b;
  Vector sigma_f;
  std::size_t n_b = 0;
  std::size_t n_f = 0;
  std::uint64_t seed = 0;

  /// Same mean / deviation in every component.
  static TwoClassParams isotropic(Index dim, double mu_b, double mu_f, double sigma_b, double sigma_f,
                                  std::size_t n_b, std::size_t n_f, std::uint64_t seed);

  Index dim() const noexcept { return mu_b.size(); }
  double background_energy() const { return sigma_b.squaredNorm(); }  // Sum_j (sigma_b^j)^2
  double foreground_energy() const { return sigma_f.squaredNorm(); }  // Sum_j (sigma_f^j)^2
  double separation() const { return (mu_b - mu_f).squaredNorm(); }   // ||mu_b - mu_f||^2

  /// Throws InvalidInput for non-positive deviations or mismatched lengths.
  void validate() const;
};

enum class ArrivalOrder { Shuffle, Interleaved, Given };

ArrivalOrder parse_arrival_order(std::string_view text);

/// n_b + n_f labeled samples, each stored as a 1 x D frame. Samples are drawn
/// background-first from Rng(seed) and then arranged by `order`:
/// Given keeps that order, Interleaved spreads the foreground evenly, and
/// Shuffle applies a seeded Fisher-Yates permutation.
FrameSequence synth_two_class(const TwoClassParams& params, ArrivalOrder order);

struct DriftRecord {
  std::size_t step = 0;  // index of the arriving frame
  FrameLabel label = FrameLabel::Background;
  double delta_norm = 0.0;  // ||v - v'|| after sign alignment
  double angle = 0.0;       // arccos(|v . v'|), in [0, pi/2]
  double e_norm = 0.0;      // ||y y^T||_2 = ||y||^2
  double lambda_before = 0.0;
  double lambda_after = 0.0;
};

inline constexpr std::size_t kDriftWarmup = 3;

/// Absorbs the first three frames, then for every later frame records how
/// far the dominant eigenvector of the running scatter moves.
std::vector<DriftRecord> drift_experiment(const FrameSequence& seq);

/// Sign-invariant distance and angle between two unit vectors.
struct VectorDrift {
  double delta_norm = 0.0;
  double angle = 0.0;
};
VectorDrift aligned_drift(const Vector& v, const Vector& v_new);

struct PerturbationReport {
  double delta_norm = 0.0;
  double e_norm = 0.0;
  double ratio = 0.0;  // delta_norm / e_norm, 0 when y == 0
};

inline constexpr double kDominantGapTolerance = 1e-8;

/// Compares the dominant eigenvector of a and a + y y^T. Throws
/// SkippedDegenerate when the dominant eigenvalue of a is not simple.
PerturbationReport check_perturbation_bound(const SymMatrix& a, const Vector& y);

struct BetaEstimate {
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t trials = 0;
  std::size_t skipped = 0;
};

/// Empirical beta: max of ||v - v'|| / ||E|| over random rank-one updates.
/// Trial t uses a direction and a magnitude factor u in [0.1, 1] drawn from
/// derive_seed(seed, t), with ||y||^2 = scale * lambda_max(a) * u, so two
/// calls differing only in `scale` perturb along identical directions.
BetaEstimate estimate_beta(const SymMatrix& a, std::size_t trials, double scale, std::uint64_t seed);

/// Scatter of `samples` standard normal vectors in R^dim.
SymMatrix random_scatter_matrix(Index dim, std::size_t samples, Rng& rng);

/// Random symmetric matrix with independent N(0,1) entries on and above the
/// diagonal.
SymMatrix random_symmetric_matrix(Index dim, Rng& rng);

struct SummaryRow {
  std::string metric;
  double estimate = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ExpectationReport {
  std::vector<SummaryRow> rows;
  bool regime_warning = false;  // n_b != n_f
  std::size_t trials = 0;

  const SummaryRow& row(std::string_view metric) const;
};

/// Monte-Carlo check of the chain linking the arriving frame to the drift of
/// the dominant eigenvector. One history of n_b + n_f frames is drawn from
/// `params`; each trial then draws one background and one foreground
/// arrival and measures ||E||, the class distances, the cross term and the
/// drift angle against that fixed history.
ExpectationReport check_expectation_chain(const TwoClassParams& params, std::size_t trials);

/// Summary rows for the perturbation-bound protocol on one matrix.
std::vector<SummaryRow> perturbation_bound_summary(const SymMatrix& a, std::size_t trials, double scale,
                                                   std::uint64_t seed);

void write_drift_csv(std::ostream& out, const std::vector<DriftRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

std::string_view label_name(FrameLabel label);

inline constexpr double kZ99 = 2.5758293035489004;

}  // namespace wevbg
