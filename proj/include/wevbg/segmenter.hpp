#pragma once

#include <vector>

#include "wevbg/eigenmodel.hpp"
#include "wevbg/image.hpp"

namespace wevbg {

struct BlockOrigin {
  Index row = 0;
  Index col = 0;
  bool operator==(const BlockOrigin&) const = default;
};

/// Row-major grid of blocks covering a frame. Where the frame size is not a
/// multiple of the block size, the last row/column of blocks is shifted
/// inward to end on the frame boundary, so every origin satisfies
/// row + h <= H and col + w <= W and no pixel is dropped.
struct BlockGrid {
  Index frame_height = 0;
  Index frame_width = 0;
  BlockShape block;
  std::vector<BlockOrigin> origins;

  std::size_t size() const noexcept { return origins.size(); }
};

BlockGrid tile_blocks(Index frame_height, Index frame_width, BlockShape block);

Vector extract_block(const Image& frame, BlockOrigin origin, BlockShape block);
void write_block(Image& frame, BlockOrigin origin, BlockShape block, const Vector& values);

/// D x n matrix of one block's pixels across all frames.
Matrix block_samples(const FrameSequence& frames, BlockOrigin origin, BlockShape block);

/// One full eigenbasis per grid origin (mean-centered, snapshot method when
/// the block has more pixels than there are frames).
std::vector<EigenBasis> train_block_bases(const FrameSequence& frames, const BlockGrid& grid);

std::vector<BaseModel> build_block_models(const std::vector<EigenBasis>& bases, const Selection& selection,
                                          const BlockGrid& grid);

std::vector<BaseModel> train_block_models(const FrameSequence& frames, const BlockGrid& grid,
                                          const Selection& selection);

/// Stitched per-block background estimate, unclamped. Overlapping pixels of
/// clamped edge blocks take the value of the later block in origin order.
Image estimate_frame_background(const std::vector<BaseModel>& models, const BlockGrid& grid, const Image& frame);

struct SegmentationResult {
  Image background;  // clamped to [0, 1]
  Image residual;    // |frame - background|
  BinaryMask mask;   // residual > threshold
  double threshold = 0.0;
};

inline constexpr double kDefaultThreshold = 0.1;

SegmentationResult segment_frame(const std::vector<BaseModel>& models, const BlockGrid& grid, const Image& frame,
                                 double tau);

}  // namespace wevbg
