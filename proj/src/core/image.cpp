#include "dcam/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

std::string_view to_string(ColorState state) {
  switch (state) {
    case ColorState::LinearDevice:
      return "linear-device";
    case ColorState::LinearSRGB:
      return "linear-srgb";
    case ColorState::GammaSRGB:
      return "gamma-srgb";
  }
  return "unknown";
}

ColorState color_state_from_string(std::string_view name) {
  if (name == "linear-device") return ColorState::LinearDevice;
  if (name == "linear-srgb") return ColorState::LinearSRGB;
  if (name == "gamma-srgb") return ColorState::GammaSRGB;
  throw InvalidArgumentError("unknown color state '" + std::string(name) + "'");
}

Image::Image(int width, int height, ColorState state, float fill)
    : width_(width), height_(height), state_(state) {
  if (width < 0 || height < 0) throw ShapeError("image dimensions must be non-negative");
  data_.assign(pixel_count() * kChannels, fill);
}

Image::Image(int width, int height, ColorState state, std::vector<float> data)
    : width_(width), height_(height), state_(state), data_(std::move(data)) {
  if (width < 0 || height < 0) throw ShapeError("image dimensions must be non-negative");
  if (data_.size() != pixel_count() * kChannels) {
    throw ShapeError("image data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(pixel_count() * kChannels));
  }
}

Image Image::with_state(ColorState state) const {
  Image out = *this;
  out.state_ = state;
  return out;
}

void Image::clip() {
  for (float& v : data_) v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
}

}  // namespace dcam
