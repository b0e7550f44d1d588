#include "dcam/filters.hpp"

#include <cmath>

#include "dcam/error.hpp"

namespace dcam {

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0 || !std::isfinite(sigma)) throw InvalidArgumentError("sigma must be >= 0");
  if (sigma == 0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_blur(std::span<const double> src, int w, int h, double sigma) {
  if (src.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw ShapeError("gaussian_blur: plane size mismatch");
  }
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] *
               src[static_cast<std::size_t>(y) * w + reflect_index(x + i, w)];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] *
               tmp[static_cast<std::size_t>(reflect_index(y + i, h)) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

}  // namespace dcam
