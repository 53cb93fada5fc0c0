#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wevbg/image.hpp"
#include "wevbg/segmenter.hpp"

namespace wevbg {

/// Synthetic surveillance-style scene: a static textured background with
/// per-frame Gaussian sensor noise, and a bright square object that shows up
/// in a subset of frames at a different place each time.
struct SceneParams {
  Index height = 120;
  Index width = 160;
  std::size_t frames = 121;
  std::size_t object_frames = 29;  // frames that contain the object
  double object_area = 0.10;       // object area as a fraction of the frame
  double object_intensity = 0.9;
  double noise_sigma = 0.02;
  std::uint64_t seed = 7;

  void validate() const;  // InvalidInput
};

struct ObjectBox {
  Index row = 0;
  Index col = 0;
  Index side = 0;

  bool contains(Index r, Index c) const { return r >= row && r < row + side && c >= col && c < col + side; }
  /// Pixels of the box that fall inside the block at `origin`.
  Index overlap(BlockOrigin origin, BlockShape block) const;
};

struct Scene {
  FrameSequence seq;                        // labels: fg iff the object is present
  Image background;                         // noise-free static background
  std::vector<std::optional<ObjectBox>> objects;  // per frame

  /// Object mask of frame i (all zeros for background frames).
  BinaryMask object_mask(std::size_t i) const;
};

/// Side length of the square object for the given area fraction.
Index object_side(const SceneParams& params);

Scene synth_scene(const SceneParams& params);

/// Sequence restricted to one block, relabeled per block: a frame is
/// foreground when the object overlaps the block.
FrameSequence crop_scene_block(const Scene& scene, BlockOrigin origin, BlockShape block);

}  // namespace wevbg
