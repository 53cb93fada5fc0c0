#include "wevbg/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "wevbg/errors.hpp"
#include "wevbg/parallel.hpp"
#include "wevbg/theory.hpp"

namespace wevbg {

std::vector<std::size_t> background_indices(const FrameSequence& seq) {
  if (!seq.labels) fail(ErrorKind::LabelError, "sequence has no labels");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.labels->size(); ++i) {
    if ((*seq.labels)[i] == FrameLabel::Background) out.push_back(i);
  }
  return out;
}

Image build_ground_truth(const FrameSequence& seq) {
  seq.validate();
  const auto sources = background_indices(seq);
  if (sources.empty()) fail(ErrorKind::InsufficientData, "ground truth needs at least one background frame");
  Image gt(seq.height(), seq.width());
  for (std::size_t i : sources) {
    for (std::size_t p = 0; p < gt.pixels.size(); ++p) gt.pixels[p] += seq.frames[i].pixels[p];
  }
  for (double& p : gt.pixels) p /= static_cast<double>(sources.size());
  return gt;
}

double rmse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorKind::DimensionError, "rmse: image shapes differ");
  if (a.pixels.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(a.pixels.size()));
}

double rmse(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorKind::DimensionError, "rmse: vector lengths differ");
  if (a.size() == 0) return 0.0;
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

namespace {

std::vector<double> column_of(const EvalReport& report, const Selection& selection, bool background) {
  const std::string id = selection.to_string();
  std::vector<double> out;
  for (const auto& row : report.rows) {
    if (row.selection_id == id) out.push_back(background ? row.bg_rmse : row.recon_rmse);
  }
  return out;
}

EvalReport evaluate(const std::vector<SelectionModels>& models, const BlockGrid& grid, const FrameSequence& frames,
                    const Image& gt) {
  frames.validate();
  if (models.empty()) fail(ErrorKind::SelectionError, "no selections to evaluate");
  for (const auto& f : frames.frames) {
    if (!f.same_shape(gt)) fail(ErrorKind::DimensionError, "frame shape differs from ground truth");
  }
  const std::size_t per_frame = models.size();
  EvalReport report;
  for (const auto& m : models) report.selections.push_back(m.selection);
  report.rows.resize(frames.size() * per_frame);

  parallel_for(frames.size(), [&](std::size_t f) {
    for (std::size_t s = 0; s < per_frame; ++s) {
      Image estimate = estimate_frame_background(models[s].models, grid, frames.frames[f]);
      for (double& p : estimate.pixels) p = std::clamp(p, 0.0, 1.0);
      report.rows[f * per_frame + s] = {f, models[s].selection.to_string(), rmse(estimate, frames.frames[f]),
                                        rmse(estimate, gt)};
    }
  });
  return report;
}

}  // namespace

std::vector<double> EvalReport::bg_column(const Selection& selection) const { return column_of(*this, selection, true); }

std::vector<double> EvalReport::recon_column(const Selection& selection) const {
  return column_of(*this, selection, false);
}

EvalReport sweep_selections(const FrameSequence& seq, const BlockGrid& grid, const std::vector<Selection>& selections,
                            const Image& gt) {
  if (selections.empty()) fail(ErrorKind::SelectionError, "no selections to evaluate");
  const auto bases = train_block_bases(seq, grid);
  std::vector<SelectionModels> models;
  for (const auto& s : selections) models.push_back({s, build_block_models(bases, s, grid)});
  EvalReport report = evaluate(models, grid, seq, gt);
  if (seq.labels) report.gt_source = background_indices(seq);
  return report;
}

EvalReport holdout_eval(const std::vector<SelectionModels>& models, const BlockGrid& grid, const FrameSequence& frames,
                        const Image& gt) {
  return evaluate(models, grid, frames, gt);
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "frame_index,selection_id,recon_rmse,bg_rmse\n";
  for (const auto& row : report.rows) {
    // Selection ids may contain commas (idx:1,2); quote them.
    const bool quote = row.selection_id.find(',') != std::string::npos;
    out << row.frame_index << ',' << (quote ? "\"" : "") << row.selection_id << (quote ? "\"" : "") << ','
        << fmt::format("{}", row.recon_rmse) << ',' << fmt::format("{}", row.bg_rmse) << '\n';
  }
}

std::vector<SubspacePoint> subspace_grid(const FrameSequence& seq, const EigenBasis& basis,
                                         std::pair<std::size_t, std::size_t> component_pair, std::size_t grid_n) {
  const auto [ci, cj] = component_pair;
  if (ci == cj || ci == 0 || cj == 0 || ci > basis.size() || cj > basis.size()) {
    fail(ErrorKind::SelectionError, "invalid component pair for a basis of " + std::to_string(basis.size()));
  }
  if (grid_n < 2) fail(ErrorKind::InvalidInput, "grid needs at least 2 vertices per side");
  seq.validate();

  const Vector& vi = basis.pairs[ci - 1].vector;
  const Vector& vj = basis.pairs[cj - 1].vector;
  std::vector<SubspacePoint> points;
  points.reserve(seq.size());
  for (std::size_t f = 0; f < seq.size(); ++f) {
    const Vector x = seq.frames[f].as_vector();
    if (x.size() != basis.dim()) fail(ErrorKind::DimensionError, "frame size differs from basis dimension");
    const Vector centered = x - basis.mean;
    SubspacePoint p{f, vi.dot(centered), vj.dot(centered), std::nullopt, false};
    if (seq.labels) p.label = (*seq.labels)[f];
    points.push_back(p);
  }
  if (points.empty()) return points;

  double lo_i = points[0].coord_i, hi_i = lo_i, lo_j = points[0].coord_j, hi_j = lo_j;
  for (const auto& p : points) {
    lo_i = std::min(lo_i, p.coord_i);
    hi_i = std::max(hi_i, p.coord_i);
    lo_j = std::min(lo_j, p.coord_j);
    hi_j = std::max(hi_j, p.coord_j);
  }
  const double steps = static_cast<double>(grid_n - 1);
  for (std::size_t a = 0; a < grid_n; ++a) {
    for (std::size_t b = 0; b < grid_n; ++b) {
      const double gi = lo_i + (hi_i - lo_i) * static_cast<double>(a) / steps;
      const double gj = lo_j + (hi_j - lo_j) * static_cast<double>(b) / steps;
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t f = 0; f < points.size(); ++f) {
        const double d = (points[f].coord_i - gi) * (points[f].coord_i - gi) +
                         (points[f].coord_j - gj) * (points[f].coord_j - gj);
        if (d < best_d) {
          best_d = d;
          best = f;
        }
      }
      points[best].is_vertex_representative = true;
    }
  }
  return points;
}

double class_spread(const std::vector<SubspacePoint>& points, FrameLabel label) {
  double si = 0.0, sj = 0.0;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (p.label == label) {
      si += p.coord_i;
      sj += p.coord_j;
      ++n;
    }
  }
  if (n < 2) return 0.0;
  const double mi = si / static_cast<double>(n);
  const double mj = sj / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& p : points) {
    if (p.label == label) ss += (p.coord_i - mi) * (p.coord_i - mi) + (p.coord_j - mj) * (p.coord_j - mj);
  }
  return ss / static_cast<double>(n - 1);
}

std::pair<std::size_t, std::size_t> weakest_nonzero_pair(const EigenBasis& basis) {
  const std::size_t r = basis.nonzero_count();
  if (r < 2) fail(ErrorKind::SelectionError, "basis has fewer than two non-zero components");
  return {r - 1, r};
}

void write_subspace_csv(std::ostream& out, const std::vector<SubspacePoint>& points) {
  out << "frame_index,coord_i,coord_j,label,is_vertex_representative\n";
  for (const auto& p : points) {
    out << p.frame_index << ',' << fmt::format("{}", p.coord_i) << ',' << fmt::format("{}", p.coord_j) << ','
        << (p.label ? label_name(*p.label) : "") << ',' << (p.is_vertex_representative ? 1 : 0) << '\n';
  }
}

}  // namespace wevbg
