#include "dcam/color.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

namespace {

void require_linear(const Image& img, const char* op) {
  if (!is_linear(img.state())) {
    throw StateMismatchError(std::string(op) + ": expected a linear image, got " +
                             std::string(to_string(img.state())));
  }
}

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

Matrix3 identity_matrix() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

double determinant(const Matrix3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

Matrix3 inverse(const Matrix3& m) {
  const double det = determinant(m);
  if (!(std::abs(det) > 1e-9)) throw InvalidArgumentError("color matrix is singular");
  Matrix3 inv;
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

Vec3 multiply(const Matrix3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

Illuminant::Illuminant(double r, double g, double b) {
  if (!(r > 0 && g > 0 && b > 0) || !std::isfinite(r) || !std::isfinite(g) || !std::isfinite(b)) {
    throw InvalidArgumentError("illuminant components must be finite and positive");
  }
  const double n = std::sqrt(r * r + g * g + b * b);
  // Already unit length (e.g. read back from a sidecar): keep the exact bits.
  if (std::abs(n - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) {
    rgb_ = {r, g, b};
  } else {
    rgb_ = {r / n, g / n, b / n};
  }
}

Vec3 Illuminant::green_relative() const {
  return {rgb_[0] / rgb_[1], 1.0, rgb_[2] / rgb_[1]};
}

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Image srgb_degamma(const Image& img) {
  if (img.state() != ColorState::GammaSRGB) {
    throw StateMismatchError("srgb_degamma: expected gamma-srgb input, got " +
                             std::string(to_string(img.state())));
  }
  Image out = img.with_state(ColorState::LinearSRGB);
  for (float& v : out.data()) v = static_cast<float>(srgb_to_linear(v));
  return out;
}

Image srgb_gamma(const Image& img) {
  if (img.state() != ColorState::LinearSRGB) {
    throw StateMismatchError("srgb_gamma: expected linear-srgb input, got " +
                             std::string(to_string(img.state())));
  }
  Image out = img.with_state(ColorState::GammaSRGB);
  for (float& v : out.data()) v = static_cast<float>(linear_to_srgb(v));
  return out;
}

Image apply_color_matrix(const Image& img, const Matrix3& m, ColorState out_state) {
  require_linear(img, "apply_color_matrix");
  if (!(std::abs(determinant(m)) > 1e-9)) {
    throw InvalidArgumentError("apply_color_matrix: singular matrix");
  }
  Image out(img.width(), img.height(), out_state);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto orr = out.plane(0), og = out.plane(1), ob = out.plane(2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const Vec3 v = multiply(m, {r[i], g[i], b[i]});
    orr[i] = clip01(v[0]);
    og[i] = clip01(v[1]);
    ob[i] = clip01(v[2]);
  }
  return out;
}

Image apply_gains(const Image& img, const Vec3& gains) {
  require_linear(img, "apply_gains");
  for (double g : gains) {
    if (!(g > 0) || !std::isfinite(g)) throw InvalidArgumentError("gains must be positive");
  }
  Image out = img;
  for (int c = 0; c < Image::kChannels; ++c) {
    const double g = gains[static_cast<std::size_t>(c)];
    if (g == 1.0) continue;
    for (float& v : out.plane(c)) v = clip01(v * g);
  }
  return out;
}

Vec3 white_balance_gains(const Illuminant& illum) {
  const Vec3& e = illum.rgb();
  return {e[1] / e[0], 1.0, e[1] / e[2]};
}

Image white_balance(const Image& img, const Illuminant& illum) {
  require_linear(img, "white_balance");
  return apply_gains(img, white_balance_gains(illum));
}

Image crop(const Image& img, int x0, int y0, int w, int h, const std::optional<CfaPattern>& align) {
  if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > img.width() || y0 + h > img.height()) {
    throw ShapeError("crop window (" + std::to_string(x0) + "," + std::to_string(y0) + " " +
                     std::to_string(w) + "x" + std::to_string(h) + ") outside " +
                     std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image");
  }
  if (align && (x0 % align->tile_w() != 0 || y0 % align->tile_h() != 0)) {
    throw ShapeError("crop origin (" + std::to_string(x0) + "," + std::to_string(y0) +
                     ") breaks CFA phase; must be a multiple of the " +
                     std::to_string(align->tile_w()) + "x" + std::to_string(align->tile_h()) +
                     " tile");
  }
  Image out(w, h, img.state());
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    }
  }
  return out;
}

}  // namespace dcam
