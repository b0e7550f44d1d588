#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dcam {

enum class ColorState { LinearDevice, LinearSRGB, GammaSRGB };

std::string_view to_string(ColorState state);
ColorState color_state_from_string(std::string_view name);

inline bool is_linear(ColorState s) { return s != ColorState::GammaSRGB; }

// Planar three-channel float image. Samples are stored channel-major:
// plane 0 (R), then plane 1 (G), then plane 2 (B), each row-major.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, ColorState state, float fill = 0.0f);
  Image(int width, int height, ColorState state, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  ColorState state() const { return state_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }

  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }

  std::span<const float> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }
  std::span<float> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  Image with_state(ColorState state) const;

  // Clamp every sample into [0,1]; NaN maps to 0.
  void clip();

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  ColorState state_ = ColorState::LinearDevice;
  std::vector<float> data_;
};

// Single-channel float plane, used for mosaics and offset fields.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Plane& other) const = default;
};

}  // namespace dcam
