#include "wevbg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wevbg/errors.hpp"
#include "wevbg/rng.hpp"

namespace wevbg {

namespace {

constexpr Index kTextureCell = 8;

Image make_texture(Index h, Index w, Rng& rng) {
  const Index cells_r = (h + kTextureCell - 1) / kTextureCell;
  const Index cells_c = (w + kTextureCell - 1) / kTextureCell;
  std::vector<double> cell(static_cast<std::size_t>(cells_r * cells_c));
  for (double& v : cell) v = rng.uniform() - 0.5;

  Image img(h, w);
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      const double wave = std::sin(2.0 * std::numbers::pi * static_cast<double>(c) / 23.0) *
                          std::cos(2.0 * std::numbers::pi * static_cast<double>(r) / 17.0);
      const double patch = cell[static_cast<std::size_t>((r / kTextureCell) * cells_c + c / kTextureCell)];
      img.at(r, c) = 0.35 + 0.10 * wave + 0.16 * patch;
    }
  }
  return img;
}

}  // namespace

Index ObjectBox::overlap(BlockOrigin origin, BlockShape block) const {
  const Index r0 = std::max(row, origin.row);
  const Index r1 = std::min(row + side, origin.row + block.height);
  const Index c0 = std::max(col, origin.col);
  const Index c1 = std::min(col + side, origin.col + block.width);
  return std::max<Index>(0, r1 - r0) * std::max<Index>(0, c1 - c0);
}

BinaryMask Scene::object_mask(std::size_t i) const {
  BinaryMask mask{background.height, background.width,
                  std::vector<std::uint8_t>(static_cast<std::size_t>(background.size()), 0)};
  if (const auto& box = objects.at(i)) {
    for (Index r = box->row; r < box->row + box->side; ++r) {
      for (Index c = box->col; c < box->col + box->side; ++c) {
        mask.bits[static_cast<std::size_t>(r * background.width + c)] = 1;
      }
    }
  }
  return mask;
}

Index object_side(const SceneParams& params) {
  const double area = params.object_area * static_cast<double>(params.height * params.width);
  const auto side = static_cast<Index>(std::lround(std::sqrt(area)));
  return std::clamp<Index>(side, 1, std::min(params.height, params.width));
}

void SceneParams::validate() const {
  if (height < 1 || width < 1 || frames < 2) {
    fail(ErrorKind::InvalidInput, "scene needs a positive frame size and at least two frames");
  }
  if (object_frames > frames) fail(ErrorKind::InvalidInput, "more object frames than frames");
  if (!(object_area > 0.0 && object_area <= 1.0)) fail(ErrorKind::InvalidInput, "object area must be in (0, 1]");
  if (!(object_intensity >= 0.0 && object_intensity <= 1.0)) {
    fail(ErrorKind::InvalidInput, "object intensity must be in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) fail(ErrorKind::InvalidInput, "noise sigma must be non-negative");
}

Scene synth_scene(const SceneParams& params) {
  params.validate();

  Rng rng(params.seed);
  Scene scene;
  scene.background = make_texture(params.height, params.width, rng);

  std::vector<std::size_t> order(params.frames);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> has_object(params.frames, false);
  for (std::size_t i = 0; i < params.object_frames; ++i) has_object[order[i]] = true;

  const Index side = object_side(params);
  scene.objects.resize(params.frames);
  scene.seq.labels.emplace();
  for (std::size_t f = 0; f < params.frames; ++f) {
    if (has_object[f]) {
      const auto row = static_cast<Index>(rng.below(static_cast<std::uint64_t>(params.height - side + 1)));
      const auto col = static_cast<Index>(rng.below(static_cast<std::uint64_t>(params.width - side + 1)));
      scene.objects[f] = ObjectBox{row, col, side};
    }
    Image frame(params.height, params.width);
    for (Index r = 0; r < params.height; ++r) {
      for (Index c = 0; c < params.width; ++c) {
        const bool on_object = scene.objects[f] && scene.objects[f]->contains(r, c);
        const double base = on_object ? params.object_intensity : scene.background.at(r, c);
        frame.at(r, c) = std::clamp(base + params.noise_sigma * rng.normal(), 0.0, 1.0);
      }
    }
    scene.seq.frames.push_back(std::move(frame));
    scene.seq.labels->push_back(has_object[f] ? FrameLabel::Foreground : FrameLabel::Background);
    scene.seq.sources.push_back("synthetic:" + std::to_string(params.seed));
  }
  return scene;
}

FrameSequence crop_scene_block(const Scene& scene, BlockOrigin origin, BlockShape block) {
  FrameSequence out;
  out.labels.emplace();
  for (std::size_t f = 0; f < scene.seq.size(); ++f) {
    const Vector v = extract_block(scene.seq.frames[f], origin, block);
    out.frames.push_back(Image::from_vector(block.height, block.width, v));
    const bool overlaps = scene.objects[f] && scene.objects[f]->overlap(origin, block) > 0;
    out.labels->push_back(overlaps ? FrameLabel::Foreground : FrameLabel::Background);
    out.sources.push_back(scene.seq.sources[f]);
  }
  return out;
}

}  // namespace wevbg
