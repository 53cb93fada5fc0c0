#include "wevbg/segmenter.hpp"

#include <algorithm>
#include <cmath>

#include "wevbg/errors.hpp"
#include "wevbg/parallel.hpp"
#include "wevbg/streamstats.hpp"

namespace wevbg {

namespace {

std::vector<Index> axis_origins(Index extent, Index step) {
  std::vector<Index> out;
  Index pos = 0;
  for (; pos + step <= extent; pos += step) out.push_back(pos);
  if (pos < extent) out.push_back(extent - step);
  return out;
}

void check_grid_frame(const BlockGrid& grid, const Image& frame) {
  if (frame.height != grid.frame_height || frame.width != grid.frame_width) {
    fail(ErrorKind::DimensionError, "frame shape does not match the block grid");
  }
}

}  // namespace

BlockGrid tile_blocks(Index frame_height, Index frame_width, BlockShape block) {
  if (block.height < 1 || block.width < 1 || frame_height < 1 || frame_width < 1) {
    fail(ErrorKind::InvalidBlockSize, "block and frame dimensions must be positive");
  }
  if (block.height > frame_height || block.width > frame_width) {
    fail(ErrorKind::InvalidBlockSize, "block is larger than the frame");
  }
  BlockGrid grid{frame_height, frame_width, block, {}};
  for (Index r : axis_origins(frame_height, block.height)) {
    for (Index c : axis_origins(frame_width, block.width)) grid.origins.push_back({r, c});
  }
  return grid;
}

Vector extract_block(const Image& frame, BlockOrigin origin, BlockShape block) {
  if (origin.row < 0 || origin.col < 0 || origin.row + block.height > frame.height ||
      origin.col + block.width > frame.width) {
    fail(ErrorKind::DimensionError, "block lies outside the frame");
  }
  Vector v(block.pixels());
  Index k = 0;
  for (Index r = 0; r < block.height; ++r) {
    for (Index c = 0; c < block.width; ++c) v[k++] = frame.at(origin.row + r, origin.col + c);
  }
  return v;
}

void write_block(Image& frame, BlockOrigin origin, BlockShape block, const Vector& values) {
  if (values.size() != block.pixels()) fail(ErrorKind::DimensionError, "block value count mismatch");
  Index k = 0;
  for (Index r = 0; r < block.height; ++r) {
    for (Index c = 0; c < block.width; ++c) frame.at(origin.row + r, origin.col + c) = values[k++];
  }
}

Matrix block_samples(const FrameSequence& frames, BlockOrigin origin, BlockShape block) {
  Matrix samples(block.pixels(), static_cast<Index>(frames.size()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    samples.col(static_cast<Index>(i)) = extract_block(frames.frames[i], origin, block);
  }
  return samples;
}

std::vector<EigenBasis> train_block_bases(const FrameSequence& frames, const BlockGrid& grid) {
  if (frames.size() < 2) fail(ErrorKind::InsufficientData, "training needs at least two frames");
  frames.validate();
  check_grid_frame(grid, frames.frames.front());

  std::vector<EigenBasis> bases(grid.size());
  parallel_for(grid.size(), [&](std::size_t b) {
    const Matrix samples = block_samples(frames, grid.origins[b], grid.block);
    const Vector mean = column_mean(samples);
    bases[b] = eigenbasis_from_centered(samples.colwise() - mean, mean);
  });
  return bases;
}

std::vector<BaseModel> build_block_models(const std::vector<EigenBasis>& bases, const Selection& selection,
                                          const BlockGrid& grid) {
  if (bases.size() != grid.size()) fail(ErrorKind::DimensionError, "one basis per block is required");
  std::vector<BaseModel> models;
  models.reserve(bases.size());
  for (const auto& basis : bases) models.push_back(build_base_model(basis, selection, grid.block));
  return models;
}

std::vector<BaseModel> train_block_models(const FrameSequence& frames, const BlockGrid& grid,
                                          const Selection& selection) {
  return build_block_models(train_block_bases(frames, grid), selection, grid);
}

Image estimate_frame_background(const std::vector<BaseModel>& models, const BlockGrid& grid, const Image& frame) {
  check_grid_frame(grid, frame);
  if (models.size() != grid.size()) fail(ErrorKind::DimensionError, "one model per block is required");

  std::vector<Vector> estimates(grid.size());
  parallel_for(grid.size(), [&](std::size_t b) {
    estimates[b] = estimate_background(models[b], extract_block(frame, grid.origins[b], grid.block));
  });
  Image out(frame.height, frame.width);
  for (std::size_t b = 0; b < grid.size(); ++b) write_block(out, grid.origins[b], grid.block, estimates[b]);
  return out;
}

SegmentationResult segment_frame(const std::vector<BaseModel>& models, const BlockGrid& grid, const Image& frame,
                                 double tau) {
  if (!(tau >= 0.0)) fail(ErrorKind::InvalidInput, "threshold must be non-negative");
  SegmentationResult result;
  result.threshold = tau;
  result.background = estimate_frame_background(models, grid, frame);
  for (double& p : result.background.pixels) p = std::clamp(p, 0.0, 1.0);

  result.residual = Image(frame.height, frame.width);
  result.mask = BinaryMask{frame.height, frame.width, std::vector<std::uint8_t>(frame.pixels.size(), 0)};
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    const double r = std::abs(frame.pixels[i] - result.background.pixels[i]);
    result.residual.pixels[i] = r;
    result.mask.bits[i] = r > tau ? 1 : 0;
  }
  return result;
}

}  // namespace wevbg
