#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wevbg/linalg.hpp"

namespace wevbg {

/// Grayscale image, row-major, intensities normalized to [0, 1].
struct Image {
  Index height = 0;
  Index width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(Index h, Index w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h * w), fill) {}

  double at(Index r, Index c) const { return pixels[static_cast<std::size_t>(r * width + c)]; }
  double& at(Index r, Index c) { return pixels[static_cast<std::size_t>(r * width + c)]; }
  Index size() const noexcept { return height * width; }
  bool same_shape(const Image& other) const noexcept {
    return height == other.height && width == other.width;
  }

  Vector as_vector() const { return Eigen::Map<const Vector>(pixels.data(), size()); }
  static Image from_vector(Index h, Index w, const Vector& v);
};

struct BinaryMask {
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> bits;  // 1 = foreground

  std::size_t count() const;
};

enum class FrameLabel { Background, Foreground };

/// Ordered frames sharing one shape, with optional per-frame labels.
struct FrameSequence {
  std::vector<Image> frames;
  std::optional<std::vector<FrameLabel>> labels;
  std::vector<std::string> sources;

  std::size_t size() const noexcept { return frames.size(); }
  Index height() const { return frames.empty() ? 0 : frames.front().height; }
  Index width() const { return frames.empty() ? 0 : frames.front().width; }

  /// Throws DimensionError on mixed shapes and LabelError when labels do
  /// not cover every frame.
  void validate() const;
};

}  // namespace wevbg
