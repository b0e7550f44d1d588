#include <algorithm>
#include <cmath>
#include <string>

#include "dcam/classical_isp.hpp"
#include "dcam/error.hpp"
#include "dcam/filters.hpp"

namespace dcam {

namespace {

// (mean v^p)^(1/p), evaluated relative to the maximum so large p does not
// underflow. p = infinity returns the maximum.
double minkowski_mean(std::span<const double> values, double p) {
  double peak = 0;
  for (double v : values) peak = std::max(peak, std::abs(v));
  if (peak == 0 || std::isinf(p)) return peak;
  double acc = 0;
  for (double v : values) acc += std::pow(std::abs(v) / peak, p);
  return peak * std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

Illuminant from_channel_norms(const Vec3& e, const char* what) {
  for (int c = 0; c < 3; ++c) {
    if (!(e[static_cast<std::size_t>(c)] > 0)) {
      throw DegenerateInputError(std::string(what) + ": channel " + std::to_string(c) +
                                 " carries no signal");
    }
  }
  return Illuminant(e);
}

void check_p(double p) {
  if (!(p >= 1.0)) throw InvalidArgumentError("Minkowski order p must be >= 1");
}

}  // namespace

Illuminant estimate_illuminant_minkowski(const Image& img, double p) {
  if (!is_linear(img.state())) {
    throw StateMismatchError("estimate_illuminant_minkowski: expected a linear image");
  }
  check_p(p);
  Vec3 e{};
  std::vector<double> values(img.pixel_count());
  for (int c = 0; c < 3; ++c) {
    auto plane = img.plane(c);
    std::copy(plane.begin(), plane.end(), values.begin());
    e[static_cast<std::size_t>(c)] = minkowski_mean(values, p);
  }
  return from_channel_norms(e, "estimate_illuminant_minkowski");
}

Illuminant estimate_illuminant_gray_edge(const Image& img, double p, double sigma) {
  if (!is_linear(img.state())) {
    throw StateMismatchError("estimate_illuminant_gray_edge: expected a linear image");
  }
  check_p(p);
  const int w = img.width(), h = img.height();
  Vec3 e{};
  std::vector<double> plane(img.pixel_count()), mag(img.pixel_count());
  for (int c = 0; c < 3; ++c) {
    auto src = img.plane(c);
    std::copy(src.begin(), src.end(), plane.begin());
    const auto smooth = gaussian_blur(plane, w, h, sigma);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        auto at = [&](int yy, int xx) {
          return smooth[static_cast<std::size_t>(reflect_index(yy, h)) * w + reflect_index(xx, w)];
        };
        const double gx = 0.5 * (at(y, x + 1) - at(y, x - 1));
        const double gy = 0.5 * (at(y + 1, x) - at(y - 1, x));
        mag[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
      }
    }
    e[static_cast<std::size_t>(c)] = minkowski_mean(mag, p);
  }
  return from_channel_norms(e, "estimate_illuminant_gray_edge");
}

}  // namespace dcam
