#include "wevbg/image.hpp"

#include <algorithm>

#include "wevbg/errors.hpp"

namespace wevbg {

Image Image::from_vector(Index h, Index w, const Vector& v) {
  if (v.size() != h * w) fail(ErrorKind::DimensionError, "vector length does not match image shape");
  Image img(h, w);
  std::copy(v.data(), v.data() + v.size(), img.pixels.begin());
  return img;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void FrameSequence::validate() const {
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) fail(ErrorKind::DimensionError, "frames have mixed dimensions");
  }
  if (labels && labels->size() != frames.size()) {
    fail(ErrorKind::LabelError, "labels do not cover every frame");
  }
}

}  // namespace wevbg
