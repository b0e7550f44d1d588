#pragma once

#include <array>
#include <optional>

#include "dcam/cfa.hpp"
#include "dcam/image.hpp"

namespace dcam {

using Vec3 = std::array<double, 3>;
using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 identity_matrix();
double determinant(const Matrix3& m);
// Throws InvalidArgumentError when |det| <= 1e-9.
Matrix3 inverse(const Matrix3& m);
Vec3 multiply(const Matrix3& m, const Vec3& v);

// Scene illuminant direction, unit Euclidean length with positive components.
class Illuminant {
 public:
  // Normalizes (r, g, b). Throws InvalidArgumentError unless all components > 0.
  Illuminant(double r, double g, double b);
  explicit Illuminant(const Vec3& rgb) : Illuminant(rgb[0], rgb[1], rgb[2]) {}

  static Illuminant neutral() { return Illuminant(1.0, 1.0, 1.0); }

  const Vec3& rgb() const { return rgb_; }
  double operator[](int c) const { return rgb_[static_cast<std::size_t>(c)]; }

  // Per-channel gains relative to green: rgb_c / rgb_G.
  Vec3 green_relative() const;

  bool operator==(const Illuminant& other) const = default;

 private:
  Vec3 rgb_;
};

// Scalar sRGB transfer functions.
double srgb_to_linear(double v);
double linear_to_srgb(double v);

Image srgb_degamma(const Image& img);
Image srgb_gamma(const Image& img);

// Left-multiplies every pixel by m, then clips to [0,1].
Image apply_color_matrix(const Image& img, const Matrix3& m, ColorState out_state);

// Multiplies channel c by gains[c] and clips. Input must be linear.
Image apply_gains(const Image& img, const Vec3& gains);

// Green-anchored von Kries gains: g_c = illum_G / illum_c.
Vec3 white_balance_gains(const Illuminant& illum);
Image white_balance(const Image& img, const Illuminant& illum);

// Exact sub-image. With `align`, x0 and y0 must be multiples of the tile size.
Image crop(const Image& img, int x0, int y0, int w, int h,
           const std::optional<CfaPattern>& align = std::nullopt);

// Rec. 709 luma weights, used for exposure autoscaling.
inline constexpr Vec3 kLumaWeights{0.2126, 0.7152, 0.0722};

}  // namespace dcam
