#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wevbg/eigenmodel.hpp"
#include "wevbg/image.hpp"
#include "wevbg/segmenter.hpp"

namespace wevbg {

/// Pixelwise mean of the background-labeled frames.
Image build_ground_truth(const FrameSequence& seq);

/// Indices of the background-labeled frames (the ground-truth sources).
std::vector<std::size_t> background_indices(const FrameSequence& seq);

/// Root-mean-square pixel difference, in normalized [0, 1] units.
double rmse(const Image& a, const Image& b);
double rmse(const Vector& a, const Vector& b);

struct EvalRow {
  std::size_t frame_index = 0;
  std::string selection_id;
  double recon_rmse = 0.0;  // estimate vs. the frame itself
  double bg_rmse = 0.0;     // estimate vs. ground truth

  double recon_rmse_255() const { return 255.0 * recon_rmse; }
  double bg_rmse_255() const { return 255.0 * bg_rmse; }
};

/// Rows are ordered frame-major: all selections of frame 0, then frame 1...
struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<Selection> selections;
  std::vector<std::size_t> gt_source;

  /// Per-frame values of one selection, in frame order.
  std::vector<double> bg_column(const Selection& selection) const;
  std::vector<double> recon_column(const Selection& selection) const;
};

struct SelectionModels {
  Selection selection;
  std::vector<BaseModel> models;
};

/// Trains one basis per block on `seq`, then evaluates every frame of `seq`
/// under every selection.
EvalReport sweep_selections(const FrameSequence& seq, const BlockGrid& grid, const std::vector<Selection>& selections,
                            const Image& gt);

/// Evaluates already-trained models on frames they were not trained on.
EvalReport holdout_eval(const std::vector<SelectionModels>& models, const BlockGrid& grid, const FrameSequence& frames,
                        const Image& gt);

void write_eval_csv(std::ostream& out, const EvalReport& report);

struct SubspacePoint {
  std::size_t frame_index = 0;
  double coord_i = 0.0;
  double coord_j = 0.0;
  std::optional<FrameLabel> label;
  bool is_vertex_representative = false;
};

/// Coordinates of every frame in the plane of eigenvectors (i, j), 1-based
/// positions in descending-eigenvalue order. The bounding box of the points
/// is divided into a grid_n x grid_n lattice of vertices; the frame nearest
/// to each vertex is flagged (ties go to the lower frame index).
/// Frames must already be cropped to the basis dimension.
std::vector<SubspacePoint> subspace_grid(const FrameSequence& seq, const EigenBasis& basis,
                                         std::pair<std::size_t, std::size_t> component_pair, std::size_t grid_n);

/// Trace of the 2-D covariance of the points carrying `label`.
double class_spread(const std::vector<SubspacePoint>& points, FrameLabel label);

/// The two weakest components with a non-zero eigenvalue, (r-1, r) 1-based.
std::pair<std::size_t, std::size_t> weakest_nonzero_pair(const EigenBasis& basis);

void write_subspace_csv(std::ostream& out, const std::vector<SubspacePoint>& points);

}  // namespace wevbg
