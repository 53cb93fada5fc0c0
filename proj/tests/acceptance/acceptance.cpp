// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every threshold below is a fixed target, not a fit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "wevbg/cli.hpp"
#include "wevbg/evalkit.hpp"
#include "wevbg/linalg.hpp"
#include "wevbg/rng.hpp"
#include "wevbg/scene.hpp"
#include "wevbg/segmenter.hpp"
#include "wevbg/streamstats.hpp"
#include "wevbg/theory.hpp"

using namespace wevbg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = no limit
  std::function<Outcome()> check;
};

Vector random_vector(Index n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double spread(const std::vector<double>& xs) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *hi - *lo;
}

// ---- 1 ----------------------------------------------------------------------

Outcome welford_equivalence() {
  Rng rng(101);
  double worst = 0.0;
  for (int stream = 0; stream < 500; ++stream) {
    const Index d = 1 + static_cast<Index>(rng.below(16));
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(199));
    std::vector<Vector> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(random_vector(d, rng).array() + rng.uniform(-3, 3));
    ScatterState inc = ScatterState::empty(d);
    for (const auto& x : xs) inc = welford_update(inc, x);
    // Two-pass reference.
    Vector mu = Vector::Zero(d);
    for (const auto& x : xs) mu += x;
    mu /= static_cast<double>(n);
    Matrix s = Matrix::Zero(d, d);
    for (const auto& x : xs) s += (x - mu) * (x - mu).transpose();
    worst = std::max(worst, (inc.mean - mu).norm() / std::max(1.0, mu.norm()));
    worst = std::max(worst, (inc.scatter - s).norm() / std::max(1.0, s.norm()));
  }
  return {worst <= 1e-9, fmt::format("max relative error {:.3e} over 500 streams (limit 1e-9)", worst)};
}

// ---- 2 ----------------------------------------------------------------------

Outcome eigen_correctness() {
  Rng rng(202);
  double worst_dense = 0.0;
  for (int t = 0; t < 500; ++t) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const SymMatrix m = random_symmetric_matrix(n, rng);
    const auto pairs = eig_sym(m);
    const double lmax = std::abs(pairs.front().value) > std::abs(pairs.back().value) ? std::abs(pairs.front().value)
                                                                                     : std::abs(pairs.back().value);
    for (const auto& p : pairs) {
      worst_dense = std::max(worst_dense, (m.entries() * p.vector - p.value * p.vector).norm() / (1.0 + lmax));
    }
  }

  double worst_snapshot = 0.0;
  const std::vector<std::pair<Index, Index>> shapes{{1600, 121}, {1600, 30}, {900, 60}, {400, 121}, {100, 40}};
  for (const auto& [d, n] : shapes) {
    Matrix x(d, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < d; ++i) x(i, j) = rng.uniform();
    }
    const Vector mu = x.rowwise().mean();
    const Matrix centered = x.colwise() - mu;
    const EigenBasis basis = snapshot_eigenbasis(centered, mu);
    const double lmax = basis.pairs.front().value;
    for (const auto& p : basis.pairs) {
      const Vector sv = scatter_apply(centered, p.vector);
      worst_snapshot = std::max(worst_snapshot, (sv - p.value * p.vector).norm() / (1.0 + lmax));
    }
  }

  double worst_match = 0.0;
  for (int t = 0; t < 40; ++t) {
    const Index d = 20 + static_cast<Index>(rng.below(45));  // 20..64
    const Index n = 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d - 2)));
    Matrix x(d, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < d; ++i) x(i, j) = rng.uniform();
    }
    const Vector mu = x.rowwise().mean();
    const Matrix centered = x.colwise() - mu;
    const auto snap = snapshot_eigenbasis(centered, mu);
    const auto direct =
        direct_eigenbasis(SymMatrix::symmetrized(centered * centered.transpose()), mu, static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < snap.size(); ++k) {
      worst_match = std::max(worst_match, std::abs(snap.pairs[k].value - direct.pairs[k].value));
    }
  }
  const bool ok = worst_dense <= 1e-8 && worst_snapshot <= 1e-8 && worst_match <= 1e-8;
  return {ok, fmt::format("dense residual {:.2e}, snapshot residual {:.2e}, snapshot vs direct {:.2e} (limit 1e-8)",
                          worst_dense, worst_snapshot, worst_match)};
}

// ---- 3 ----------------------------------------------------------------------

Outcome rank_one_identities() {
  Rng rng(303);
  double interlace = 0.0, eps_violation = 0.0, norm_err = 0.0, outer_err = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Index n = 2 + static_cast<Index>(rng.below(11));
    const SymMatrix a = random_symmetric_matrix(n, rng);
    const Vector y = random_vector(n, rng, rng.uniform(0.01, 2.0));
    const double before = dominant_pair(a).value;
    const double after = dominant_pair(SymMatrix(a.entries() + y * y.transpose())).value;
    const double e_norm = y.squaredNorm();
    const double scale = 1.0 + std::abs(before) + e_norm;
    interlace = std::max({interlace, (before - after) / scale, (after - before - e_norm) / scale});
    const double eps = after - before;
    eps_violation = std::max({eps_violation, -eps / scale, (eps - e_norm) / scale});

    const Eigen::SelfAdjointEigenSolver<Matrix> es(a.entries());
    const double ref_norm = es.eigenvalues().cwiseAbs().maxCoeff();
    norm_err = std::max(norm_err, std::abs(spectral_norm(a) - ref_norm) / (1.0 + ref_norm));

    const Vector u = random_vector(n, rng), v = random_vector(n, rng);
    const Eigen::EigenSolver<Matrix> outer_es(outer(u, v));
    const auto values = outer_es.eigenvalues();
    Index big = 0;
    for (Index i = 1; i < values.size(); ++i) {
      if (std::abs(values[i]) > std::abs(values[big])) big = i;
    }
    const double got = outer_nonzero_eigenvalue(u, v);
    outer_err = std::max(outer_err, std::abs(got - values[big].real()) / (1.0 + std::abs(got)));
    outer_err = std::max(outer_err, std::abs(got - v.dot(u)));
  }
  const bool ok = interlace <= 1e-9 && eps_violation <= 1e-9 && norm_err <= 1e-9 && outer_err <= 1e-9;
  return {ok, fmt::format("interlacing {:.2e}, eps range {:.2e}, spectral norm {:.2e}, outer eigenvalue {:.2e} "
                          "over 10000 trials (limit 1e-9)",
                          std::max(0.0, interlace), std::max(0.0, eps_violation), norm_err, outer_err)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome full_basis_reconstruction() {
  const Scene scene = synth_scene(SceneParams{});
  const auto grid = tile_blocks(scene.seq.height(), scene.seq.width(), {40, 40});
  const auto models = train_block_models(scene.seq, grid, Selection::all());
  double worst = 0.0;
  for (const auto& f : scene.seq.frames) worst = std::max(worst, rmse(estimate_frame_background(models, grid, f), f));
  return {worst < 1e-8, fmt::format("max reconstruction RMSE {:.3e} over 121 frames (limit 1e-8)", worst)};
}

// ---- 5 ----------------------------------------------------------------------

double drift_ratio(std::uint64_t seed, double* fg_mean = nullptr, double* bg_mean = nullptr) {
  const auto params = TwoClassParams::isotropic(2, 0.3, 0.7, 0.01, 0.2, 92, 29, seed);
  double fg = 0.0, bg = 0.0;
  int nf = 0, nb = 0;
  for (const auto& r : drift_experiment(synth_two_class(params, ArrivalOrder::Shuffle))) {
    if (r.label == FrameLabel::Foreground) {
      fg += r.delta_norm;
      ++nf;
    } else {
      bg += r.delta_norm;
      ++nb;
    }
  }
  fg /= nf;
  bg /= nb;
  if (fg_mean) *fg_mean = fg;
  if (bg_mean) *bg_mean = bg;
  return fg / bg;
}

Outcome drift_ordering() {
  double fg = 0.0, bg = 0.0;
  drift_ratio(7, &fg, &bg);
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) ratios.push_back(drift_ratio(seed));
  const double m = mean(ratios);
  const double half = kZ99 * sample_sd(ratios) / std::sqrt(100.0);
  const bool ok = fg > bg && m - half > 2.0;
  return {ok, fmt::format("seed 7: fg {:.4g} vs bg {:.4g}; ratio over 100 seeds {:.3f}, 99% CI [{:.3f}, {:.3f}] "
                          "(lower bound must exceed 2)",
                          fg, bg, m, m - half, m + half)};
}

// ---- 6 ----------------------------------------------------------------------

Outcome perturbation_stability() {
  Rng rng(606);
  double worst = 0.0;
  double beta_lo = 1e300, beta_hi = 0.0;
  std::size_t skipped = 0;
  int matrices = 0;
  while (matrices < 20) {
    const SymMatrix a = random_scatter_matrix(5, 12, rng);
    const auto pairs = eig_sym(a);
    if (pairs[0].value - pairs[1].value <= kDominantGapTolerance * pairs[0].value) continue;
    const std::uint64_t seed = derive_seed(606, static_cast<std::uint64_t>(matrices));
    const auto coarse = estimate_beta(a, 10000, 0.01, seed);
    const auto fine = estimate_beta(a, 10000, 0.0001, seed);
    if (!std::isfinite(coarse.max_ratio) || !std::isfinite(fine.max_ratio) || coarse.max_ratio <= 0.0) {
      return {false, fmt::format("matrix {}: non-finite ratio", matrices)};
    }
    skipped += coarse.skipped + fine.skipped;
    worst = std::max(worst, std::abs(fine.max_ratio - coarse.max_ratio) / coarse.max_ratio);
    beta_lo = std::min(beta_lo, coarse.max_ratio);
    beta_hi = std::max(beta_hi, coarse.max_ratio);
    ++matrices;
  }
  return {worst < 0.1, fmt::format("20 matrices x 10000 perturbations: beta in [{:.3g}, {:.3g}], max relative change "
                                   "{:.4f} when ||y|| shrinks 10x (limit 0.1), {} skipped",
                                   beta_lo, beta_hi, worst, skipped)};
}

// ---- 7 / 8 ------------------------------------------------------------------

struct SceneRmse {
  std::vector<double> sev;
  std::vector<double> wev;
  std::vector<bool> has_object;
};

SceneRmse scene_rmse(double area) {
  SceneParams params;
  params.object_area = area;
  const Scene scene = synth_scene(params);
  const auto grid = tile_blocks(params.height, params.width, {40, 40});
  const auto report = sweep_selections(scene.seq, grid, {Selection::strongest(10), Selection::weakest(10)},
                                       scene.background);
  SceneRmse out{report.bg_column(Selection::strongest(10)), report.bg_column(Selection::weakest(10)), {}};
  for (const auto& o : scene.objects) out.has_object.push_back(o.has_value());
  return out;
}

Outcome sev_vs_wev() {
  const auto r = scene_rmse(0.10);
  std::size_t object_frames = 0, wins = 0;
  double worst_margin = 1e300;
  for (std::size_t f = 0; f < r.sev.size(); ++f) {
    if (!r.has_object[f]) continue;
    ++object_frames;
    wins += r.wev[f] < r.sev[f];
    worst_margin = std::min(worst_margin, r.sev[f] - r.wev[f]);
  }
  const bool ok = wins == object_frames && spread(r.wev) < spread(r.sev);
  return {ok, fmt::format("WEV-10 below SEV-10 on {}/{} object frames (smallest margin {:.4f} = {:.2f}/255); "
                          "mean RMSE WEV {:.2f} vs SEV {:.2f} (x255); spread WEV {:.2f} vs SEV {:.2f} (x255)",
                          wins, object_frames, worst_margin, 255 * worst_margin, 255 * mean(r.wev), 255 * mean(r.sev),
                          255 * spread(r.wev), 255 * spread(r.sev))};
}

Outcome object_size_trend() {
  std::vector<double> sev, wev;
  for (double area : {0.01, 0.05, 0.15, 0.30}) {
    const auto r = scene_rmse(area);
    sev.push_back(mean(r.sev));
    wev.push_back(mean(r.wev));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < sev.size(); ++i) monotone = monotone && sev[i] >= sev[i - 1];
  const double factor = wev.back() / wev.front();
  const bool ok = monotone && factor <= 2.0;
  return {ok, fmt::format("mean RMSE x255 at 1/5/15/30%: SEV {:.2f}/{:.2f}/{:.2f}/{:.2f} (non-decreasing: {}), "
                          "WEV {:.2f}/{:.2f}/{:.2f}/{:.2f}; WEV 30%/1% = {:.2f} (limit 2)",
                          255 * sev[0], 255 * sev[1], 255 * sev[2], 255 * sev[3], monotone ? "yes" : "no",
                          255 * wev[0], 255 * wev[1], 255 * wev[2], 255 * wev[3], factor)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome subspace_spread() {
  const SceneParams params;
  const Scene scene = synth_scene(params);
  const BlockShape block{40, 40};
  const auto grid = tile_blocks(params.height, params.width, block);
  BlockOrigin busiest = grid.origins.front();
  std::size_t most = 0;
  for (const auto& o : grid.origins) {
    std::size_t hits = 0;
    for (const auto& box : scene.objects) hits += box && box->overlap(o, block) > 0;
    if (hits > most) {
      most = hits;
      busiest = o;
    }
  }
  const FrameSequence seq = crop_scene_block(scene, busiest, block);
  const EigenBasis basis = train_block_bases(seq, tile_blocks(block.height, block.width, block))[0];
  const auto strong = subspace_grid(seq, basis, {1, 2}, 5);
  const auto weak = subspace_grid(seq, basis, weakest_nonzero_pair(basis), 5);
  const double strong_ratio = class_spread(strong, FrameLabel::Foreground) / class_spread(strong, FrameLabel::Background);
  const double weak_ratio = class_spread(weak, FrameLabel::Background) / class_spread(weak, FrameLabel::Foreground);
  const bool ok = strong_ratio >= 2.0 && weak_ratio >= 2.0;
  const auto [wi, wj] = weakest_nonzero_pair(basis);
  return {ok, fmt::format("block ({},{}) with {} object frames: fg/bg spread in (1,2) = {:.3g}, bg/fg spread in "
                          "({},{}) = {:.3g} (each must be >= 2)",
                          busiest.row, busiest.col, most, strong_ratio, wi, wj, weak_ratio)};
}

// ---- 10 ---------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = {std::istreambuf_iterator<char>(in),
                                                   std::istreambuf_iterator<char>()};
  }
  return files;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "wevbg_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> runs;
  std::size_t commands = 0;
  for (const char* tag : {"a", "b"}) {
    const fs::path d = root / tag;
    const std::string scene = (d / "scene").string(), frames = (d / "scene" / "frames").string();
    const std::vector<std::vector<std::string>> script{
        {"synth", "--out", (d / "two").string(), "--seed", "7"},
        {"synth", "--kind", "scene", "--out", scene, "--seed", "7"},
        {"perturb", "--input", (d / "two").string(), "--out", (d / "drift.csv").string()},
        {"model", "--input", frames, "--block", "40", "--selection", "weakest:10", "--out", (d / "models").string()},
        {"segment", "--models", (d / "models").string(), "--input", frames, "--out", (d / "seg").string()},
        {"eval", "--input", frames, "--block", "40", "--out", (d / "eval.csv").string()},
        {"theory", "--mode", "bound", "--trials", "2000", "--out", (d / "bound.csv").string()},
        {"theory", "--mode", "chain", "--n-bg", "60", "--n-fg", "60", "--trials", "2000", "--out",
         (d / "chain.csv").string()},
        {"subspace", "--input", frames, "--block", "40", "--pair", "weakest", "--out", (d / "sub.csv").string()},
    };
    for (auto args : script) {
      args.insert(args.begin(), "wevbg");
      std::ostringstream out, err;
      if (cli_dispatch(args, out, err) != 0) return {false, "command failed: " + args[1] + ": " + err.str()};
    }
    commands = script.size();
    runs.push_back(snapshot(d));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    differing += it == runs[1].end() || it->second != bytes;
  }
  differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
  fs::remove_all(root);
  return {differing == 0 && !runs[0].empty(),
          fmt::format("{} commands x 2 runs: {} output files, {} differing", commands, runs[0].size(), differing)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Welford equivalence", 10.0, welford_equivalence},
      {2, "Eigen correctness", 0.0, eigen_correctness},
      {3, "Rank-one update identities", 30.0, rank_one_identities},
      {4, "Full-basis reconstruction", 0.0, full_basis_reconstruction},
      {5, "Drift ordering", 60.0, drift_ordering},
      {6, "Perturbation-bound stability", 0.0, perturbation_stability},
      {7, "SEV vs WEV background quality", 120.0, sev_vs_wev},
      {8, "Object-size trend", 0.0, object_size_trend},
      {9, "Subspace spread", 0.0, subspace_spread},
      {10, "CLI determinism", 0.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt::format("{:.2f}s", secs);
    if (c.time_limit_s > 0) {
      timing += fmt::format(" (limit {:.0f}s)", c.time_limit_s);
      if (secs >= c.time_limit_s) {
        o.pass = false;
        timing += " TOO SLOW";
      }
    }
    failed += !o.pass;
    std::cout << fmt::format("[{}] criterion {:>2}: {}: {} [{}]", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail,
                             timing)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
