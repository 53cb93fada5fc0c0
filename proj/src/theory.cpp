#include "wevbg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "wevbg/errors.hpp"
#include "wevbg/parallel.hpp"
#include "wevbg/streamstats.hpp"

namespace wevbg {

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

Vector draw(Rng& rng, const Vector& mu, const Vector& sigma) {
  Vector x(mu.size());
  for (Index j = 0; j < mu.size(); ++j) x[j] = rng.normal(mu[j], sigma[j]);
  return x;
}

bool dominant_is_simple(const std::vector<EigenPair>& pairs) {
  if (pairs.size() < 2) return true;
  const double scale = std::max(std::abs(pairs[0].value), std::abs(pairs[1].value));
  return pairs[0].value - pairs[1].value > kDominantGapTolerance * scale;
}

std::string fmt_double(double x) { return fmt::format("{}", x); }

}  // namespace

TwoClassParams TwoClassParams::isotropic(Index dim, double mu_b, double mu_f, double sigma_b, double sigma_f,
                                         std::size_t n_b, std::size_t n_f, std::uint64_t seed) {
  TwoClassParams p;
  p.mu_b = Vector::Constant(dim, mu_b);
  p.mu_f = Vector::Constant(dim, mu_f);
  p.sigma_b = Vector::Constant(dim, sigma_b);
  p.sigma_f = Vector::Constant(dim, sigma_f);
  p.n_b = n_b;
  p.n_f = n_f;
  p.seed = seed;
  return p;
}

void TwoClassParams::validate() const {
  const Index d = mu_b.size();
  if (d < 1 || mu_f.size() != d || sigma_b.size() != d || sigma_f.size() != d) {
    fail(ErrorKind::InvalidInput, "two-class parameters must share one positive dimension");
  }
  if (!(sigma_b.array() > 0.0).all() || !(sigma_f.array() > 0.0).all()) {
    fail(ErrorKind::InvalidInput, "class standard deviations must be positive");
  }
  if (!mu_b.allFinite() || !mu_f.allFinite() || !sigma_b.allFinite() || !sigma_f.allFinite()) {
    fail(ErrorKind::InvalidInput, "two-class parameters must be finite");
  }
}

ArrivalOrder parse_arrival_order(std::string_view text) {
  if (text == "shuffle") return ArrivalOrder::Shuffle;
  if (text == "interleaved") return ArrivalOrder::Interleaved;
  if (text == "given") return ArrivalOrder::Given;
  fail(ErrorKind::InvalidInput, "unknown order '" + std::string(text) + "' (shuffle|interleaved|given)");
}

std::string_view label_name(FrameLabel label) { return label == FrameLabel::Background ? "bg" : "fg"; }

FrameSequence synth_two_class(const TwoClassParams& params, ArrivalOrder order) {
  params.validate();
  Rng rng(params.seed);
  const std::size_t total = params.n_b + params.n_f;

  std::vector<std::pair<Vector, FrameLabel>> samples;
  samples.reserve(total);
  for (std::size_t i = 0; i < params.n_b; ++i) {
    samples.emplace_back(draw(rng, params.mu_b, params.sigma_b), FrameLabel::Background);
  }
  for (std::size_t i = 0; i < params.n_f; ++i) {
    samples.emplace_back(draw(rng, params.mu_f, params.sigma_f), FrameLabel::Foreground);
  }

  std::vector<std::size_t> perm(total);
  for (std::size_t i = 0; i < total; ++i) perm[i] = i;
  if (order == ArrivalOrder::Shuffle) {
    rng.shuffle(perm);
  } else if (order == ArrivalOrder::Interleaved && params.n_f > 0) {
    // Foreground sample j goes to slot floor((j + 0.5) * total / n_f).
    std::vector<bool> is_fg_slot(total, false);
    for (std::size_t j = 0; j < params.n_f; ++j) {
      is_fg_slot[static_cast<std::size_t>((2 * j + 1) * total / (2 * params.n_f))] = true;
    }
    std::size_t next_bg = 0;
    std::size_t next_fg = params.n_b;
    for (std::size_t slot = 0; slot < total; ++slot) perm[slot] = is_fg_slot[slot] ? next_fg++ : next_bg++;
  }

  FrameSequence seq;
  seq.labels.emplace();
  const std::string source = "synthetic:" + std::to_string(params.seed);
  for (std::size_t slot = 0; slot < total; ++slot) {
    const auto& [x, label] = samples[perm[slot]];
    seq.frames.push_back(Image::from_vector(1, x.size(), x));
    seq.labels->push_back(label);
    seq.sources.push_back(source);
  }
  return seq;
}

VectorDrift aligned_drift(const Vector& v, const Vector& v_new) {
  const double dot = v.dot(v_new);
  const Vector aligned = dot < 0.0 ? Vector(-v_new) : v_new;
  return {(v - aligned).norm(), std::acos(std::min(1.0, std::abs(dot)))};
}

std::vector<DriftRecord> drift_experiment(const FrameSequence& seq) {
  if (seq.size() < kDriftWarmup) fail(ErrorKind::InsufficientData, "drift experiment needs at least three frames");
  if (!seq.labels) fail(ErrorKind::LabelError, "drift experiment needs labeled frames");
  seq.validate();

  ScatterState state = ScatterState::empty(seq.frames.front().size());
  for (std::size_t i = 0; i < kDriftWarmup; ++i) state = welford_update(state, seq.frames[i].as_vector());

  std::vector<DriftRecord> records;
  records.reserve(seq.size() - kDriftWarmup);
  EigenPair before = dominant_pair(SymMatrix(state.scatter));
  for (std::size_t i = kDriftWarmup; i < seq.size(); ++i) {
    const Vector x = seq.frames[i].as_vector();
    const Vector y = rank_one_increment(state, x).y;
    state = welford_update(state, x);
    EigenPair after = dominant_pair(SymMatrix(state.scatter));

    const auto drift = aligned_drift(before.vector, after.vector);
    records.push_back({i, (*seq.labels)[i], drift.delta_norm, drift.angle, y.squaredNorm(), before.value, after.value});
    before = std::move(after);
  }
  return records;
}

PerturbationReport check_perturbation_bound(const SymMatrix& a, const Vector& y) {
  if (y.size() != a.dim()) fail(ErrorKind::DimensionError, "perturbation vector length differs from matrix");
  const auto pairs = eig_sym(a);
  if (!dominant_is_simple(pairs)) fail(ErrorKind::SkippedDegenerate, "dominant eigenvalue is not simple");
  const double e_norm = y.squaredNorm();
  if (e_norm == 0.0) return {};

  const SymMatrix perturbed(a.entries() + y * y.transpose());
  const auto drift = aligned_drift(pairs.front().vector, dominant_pair(perturbed).vector);
  return {drift.delta_norm, e_norm, drift.delta_norm / e_norm};
}

BetaEstimate estimate_beta(const SymMatrix& a, std::size_t trials, double scale, std::uint64_t seed) {
  if (!dominant_is_simple(eig_sym(a))) fail(ErrorKind::SkippedDegenerate, "dominant eigenvalue is not simple");
  const double lambda_scale = spectral_norm(a);

  std::vector<double> ratios(trials, std::numeric_limits<double>::quiet_NaN());
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    Vector direction(a.dim());
    for (Index j = 0; j < direction.size(); ++j) direction[j] = rng.normal();
    const double norm = direction.norm();
    if (norm == 0.0) return;
    const double factor = 0.1 + 0.9 * rng.uniform();
    const Vector y = std::sqrt(scale * lambda_scale * factor) * (direction / norm);
    try {
      ratios[t] = check_perturbation_bound(a, y).ratio;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SkippedDegenerate) throw;
    }
  });

  BetaEstimate est;
  double sum = 0.0;
  for (double r : ratios) {
    if (std::isnan(r)) {
      ++est.skipped;
      continue;
    }
    ++est.trials;
    sum += r;
    est.max_ratio = std::max(est.max_ratio, r);
  }
  est.mean_ratio = est.trials ? sum / static_cast<double>(est.trials) : 0.0;
  return est;
}

SymMatrix random_scatter_matrix(Index dim, std::size_t samples, Rng& rng) {
  Matrix a = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < samples; ++k) {
    Vector g(dim);
    for (Index j = 0; j < dim; ++j) g[j] = rng.normal();
    a.noalias() += g * g.transpose();
  }
  return SymMatrix(a);
}

SymMatrix random_symmetric_matrix(Index dim, Rng& rng) {
  Matrix a(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = i; j < dim; ++j) a(i, j) = a(j, i) = rng.normal();
  }
  return SymMatrix(a);
}

const SummaryRow& ExpectationReport::row(std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.metric == metric) return r;
  }
  fail(ErrorKind::InvalidInput, "no metric '" + std::string(metric) + "' in report");
}

ExpectationReport check_expectation_chain(const TwoClassParams& params, std::size_t trials) {
  params.validate();
  if (params.n_b + params.n_f < 2) fail(ErrorKind::InsufficientData, "history needs at least two frames");
  if (trials < 2) fail(ErrorKind::InsufficientData, "expectation chain needs at least two trials");

  ExpectationReport report;
  report.trials = trials;
  report.regime_warning = params.n_b != params.n_f;

  // Fixed history X = {x_1..x_{n-1}} and its class means.
  const FrameSequence history = synth_two_class(params, ArrivalOrder::Shuffle);
  std::vector<Vector> frames;
  frames.reserve(history.size());
  Vector class_sum_b = Vector::Zero(params.dim());
  Vector class_sum_f = Vector::Zero(params.dim());
  for (std::size_t i = 0; i < history.size(); ++i) {
    frames.push_back(history.frames[i].as_vector());
    ((*history.labels)[i] == FrameLabel::Background ? class_sum_b : class_sum_f) += frames.back();
  }
  const ScatterState state = batch_scatter(frames);
  const Vector hist_mu_b = params.n_b ? Vector(class_sum_b / static_cast<double>(params.n_b)) : params.mu_b;
  const Vector hist_mu_f = params.n_f ? Vector(class_sum_f / static_cast<double>(params.n_f)) : params.mu_f;
  const SymMatrix a = SymMatrix::symmetrized(state.scatter);
  const Vector v = dominant_pair(a).vector;
  const double coeff = std::sqrt(static_cast<double>(state.n) / static_cast<double>(state.n + 1));

  struct Trial {
    double e_norm[2], split_bound[2], class_dist[2], theta[2], cross_bg, outer_err;
  };
  std::vector<Trial> results(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed ^ 0xC4A1Bull, t));
    const Vector xs[2] = {draw(rng, params.mu_b, params.sigma_b), draw(rng, params.mu_f, params.sigma_f)};
    const Vector* class_mu[2] = {&params.mu_b, &params.mu_f};
    Trial& r = results[t];
    r.outer_err = 0.0;
    for (int c = 0; c < 2; ++c) {
      const Vector d = xs[c] - state.mean;
      const double e_norm = outer_nonzero_eigenvalue(d, d);
      if (params.dim() <= 32) {
        const double direct = spectral_norm(SymMatrix(outer(d, d)));
        r.outer_err = std::max(r.outer_err, std::abs(direct - e_norm) / (1.0 + e_norm));
      }
      r.e_norm[c] = e_norm;
      r.split_bound[c] = (xs[c] - hist_mu_b).squaredNorm() + (xs[c] - hist_mu_f).squaredNorm();
      r.class_dist[c] = (xs[c] - *class_mu[c]).squaredNorm();
      const Vector y = coeff * d;
      const SymMatrix updated(a.entries() + y * y.transpose());
      r.theta[c] = aligned_drift(v, dominant_pair(updated).vector).angle;
    }
    r.cross_bg = 2.0 * (xs[0] - params.mu_b).dot(xs[0] - params.mu_f);
  });

  auto column = [&](auto pick) {
    std::vector<double> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(pick(r));
    return out;
  };
  const auto e_b = mean_se(column([](const Trial& r) { return r.e_norm[0]; }));
  const auto e_f = mean_se(column([](const Trial& r) { return r.e_norm[1]; }));
  const auto ub_b = mean_se(column([](const Trial& r) { return r.split_bound[0]; }));
  const auto ub_f = mean_se(column([](const Trial& r) { return r.split_bound[1]; }));
  const auto dist_b = mean_se(column([](const Trial& r) { return r.class_dist[0]; }));
  const auto dist_f = mean_se(column([](const Trial& r) { return r.class_dist[1]; }));
  const auto theta_b = mean_se(column([](const Trial& r) { return r.theta[0]; }));
  const auto theta_f = mean_se(column([](const Trial& r) { return r.theta[1]; }));
  const auto cross = mean_se(column([](const Trial& r) { return r.cross_bg; }));
  double outer_err = 0.0;
  for (const auto& r : results) outer_err = std::max(outer_err, r.outer_err);

  const double sigma_b2 = params.background_energy();
  const double sigma_f2 = params.foreground_energy();
  const double c = params.separation();
  auto below = [](const MeanSe& m, double bound) { return m.mean <= bound + 3.0 * m.se; };
  auto near = [](const MeanSe& m, double target) { return std::abs(m.mean - target) <= 3.0 * m.se; };

  auto& rows = report.rows;
  rows.push_back({"update_norm_bg_split_bound", e_b.mean, e_b.se, ub_b.mean, below(e_b, ub_b.mean)});
  rows.push_back({"update_norm_fg_split_bound", e_f.mean, e_f.se, ub_f.mean, below(e_f, ub_f.mean)});
  rows.push_back({"cross_term_bg", cross.mean, cross.se, 0.0, near(cross, 0.0)});
  rows.push_back({"class_distance_bg", dist_b.mean, dist_b.se, sigma_b2, near(dist_b, sigma_b2)});
  rows.push_back({"class_distance_fg", dist_f.mean, dist_f.se, sigma_f2, near(dist_f, sigma_f2)});
  rows.push_back({"update_norm_bg_bound", e_b.mean, e_b.se, sigma_b2 + c, below(e_b, sigma_b2 + c)});
  rows.push_back({"update_norm_fg_bound", e_f.mean, e_f.se, sigma_f2 + c, below(e_f, sigma_f2 + c)});
  const double bg_upper = theta_b.mean + kZ99 * theta_b.se;
  const double fg_lower = theta_f.mean - kZ99 * theta_f.se;
  const bool separated = bg_upper < fg_lower;
  rows.push_back({"drift_angle_bg", theta_b.mean, theta_b.se, bg_upper, separated});
  rows.push_back({"drift_angle_fg", theta_f.mean, theta_f.se, fg_lower, separated});
  rows.push_back({"outer_eigenvalue_error", outer_err, 0.0, 1e-9, outer_err <= 1e-9});
  rows.push_back({"regime_balanced", report.regime_warning ? 0.0 : 1.0, 0.0, 1.0, !report.regime_warning});
  return report;
}

std::vector<SummaryRow> perturbation_bound_summary(const SymMatrix& a, std::size_t trials, double scale,
                                                   std::uint64_t seed) {
  const BetaEstimate coarse = estimate_beta(a, trials, scale, seed);
  const BetaEstimate fine = estimate_beta(a, trials, scale / 100.0, seed);  // ||y|| shrunk 10x
  const double change = coarse.max_ratio > 0.0 ? std::abs(fine.max_ratio - coarse.max_ratio) / coarse.max_ratio : 0.0;
  const bool finite = std::isfinite(coarse.max_ratio) && std::isfinite(fine.max_ratio);
  return {
      {"beta_hat", coarse.max_ratio, 0.0, std::numeric_limits<double>::infinity(), finite},
      {"beta_hat_shrunk", fine.max_ratio, 0.0, std::numeric_limits<double>::infinity(), finite},
      {"beta_relative_change", change, 0.0, 0.1, finite && change < 0.1},
      {"mean_ratio", coarse.mean_ratio, 0.0, coarse.max_ratio, coarse.mean_ratio <= coarse.max_ratio},
      {"skipped_degenerate", static_cast<double>(coarse.skipped + fine.skipped), 0.0, 0.0,
       coarse.skipped + fine.skipped == 0},
  };
}

void write_drift_csv(std::ostream& out, const std::vector<DriftRecord>& records) {
  out << "step,label,delta_norm,angle,e_norm\n";
  for (const auto& r : records) {
    out << r.step << ',' << label_name(r.label) << ',' << fmt_double(r.delta_norm) << ',' << fmt_double(r.angle)
        << ',' << fmt_double(r.e_norm) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "metric,estimate,std_error,bound,pass\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << fmt_double(r.estimate) << ',' << fmt_double(r.std_error) << ','
        << fmt_double(r.bound) << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace wevbg
