#include "dcam/raw_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "dcam/error.hpp"
#include "dcam/rng.hpp"

namespace dcam {

RawFrame::RawFrame(int width, int height, CfaPattern cfa)
    : width_(width), height_(height), cfa_(std::move(cfa)) {
  if (width <= 0 || height <= 0 || width % cfa_.tile_w() != 0 || height % cfa_.tile_h() != 0) {
    throw ShapeError("raw frame " + std::to_string(width) + "x" + std::to_string(height) +
                     " is not a positive multiple of the " + std::string(cfa_.name_string()) +
                     " tile");
  }
  mosaic_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f);
}

Image apply_exposure(const Image& img, double gain) {
  if (img.state() != ColorState::LinearDevice) {
    throw StateMismatchError("apply_exposure: expected linear-device input");
  }
  if (!(gain > 0) || !std::isfinite(gain)) throw InvalidArgumentError("exposure gain must be > 0");
  Image out = img;
  if (gain == 1.0) return out;
  for (float& v : out.data()) v = static_cast<float>(std::clamp(v * gain, 0.0, 1.0));
  return out;
}

double shot_noise_sigma(double snr_db) { return std::pow(10.0, -snr_db / 20.0); }

Image add_shot_noise(const Image& img, double snr_db, std::uint64_t seed) {
  if (!is_linear(img.state())) throw StateMismatchError("add_shot_noise: expected a linear image");
  if (std::isinf(snr_db) && snr_db > 0) return img;
  const double sigma = shot_noise_sigma(snr_db);
  Rng rng(seed);
  Image out = img;
  for (float& v : out.data()) {
    const double n = rng.normal() * sigma;
    v = static_cast<float>(std::clamp(v * (1.0 + n), 0.0, 1.0));
  }
  return out;
}

Plane make_fpn_field(int width, int height, const FpnParams& p) {
  if (width <= 0 || height <= 0) throw ShapeError("make_fpn_field: dimensions must be positive");
  if (p.row_amp < 0 || p.col_amp < 0 || p.gauss_sigma < 0) {
    throw InvalidArgumentError("FPN amplitudes and sigma must be >= 0");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> row_term(static_cast<std::size_t>(height));
  std::vector<double> col_term(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    row_term[static_cast<std::size_t>(y)] = p.row_amp * std::sin(kTwoPi * p.row_freq * y + p.row_phase);
  }
  for (int x = 0; x < width; ++x) {
    col_term[static_cast<std::size_t>(x)] = p.col_amp * std::sin(kTwoPi * p.col_freq * x + p.col_phase);
  }
  Plane field(width, height);
  Rng rng(p.seed);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double g = p.gauss_sigma > 0 ? p.gauss_sigma * rng.normal() : 0.0;
      field.at(y, x) = static_cast<float>(row_term[static_cast<std::size_t>(y)] +
                                          col_term[static_cast<std::size_t>(x)] + g);
    }
  }
  return field;
}

RawFrame mosaic(const Image& img, const CfaPattern& cfa) {
  if (img.width() % cfa.tile_w() != 0 || img.height() % cfa.tile_h() != 0) {
    throw ShapeError("mosaic: image " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()) + " not a multiple of the CFA tile");
  }
  RawFrame raw(img.width(), img.height(), cfa);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) raw.at(y, x) = img.at(cfa.channel_at(y, x), y, x);
  }
  return raw;
}

std::size_t defect_count(double fraction, std::size_t sites) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(sites) + 0.5));
}

RawFrame inject_defects(const RawFrame& raw, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgumentError("defect fraction must lie in [0,1]");
  }
  RawFrame out = raw;
  out.meta.defect_seed = seed;
  out.meta.defect_fraction = fraction;
  out.meta.defects.clear();
  const std::size_t n = raw.size();
  const std::size_t k = std::min(n, defect_count(fraction, n));
  if (k == 0) return out;
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  out.meta.defects.reserve(k);
  auto mosaic = out.mosaic();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    float value = rng.below(2) == 0 ? 0.0f : 1.0f;
    // A clipped site already at the drawn level sticks at the other one.
    if (mosaic[idx[i]] == value) value = 1.0f - value;
    mosaic[idx[i]] = value;
    out.meta.defects.push_back({idx[i], value});
  }
  return out;
}

Image apply_illuminant(const Image& linear, const Illuminant& illum) {
  return apply_gains(linear, illum.green_relative());
}

SimResult simulate_raw(const Image& clean, const SimMeta& meta, const CfaPattern& cfa) {
  if (clean.state() != ColorState::GammaSRGB) {
    throw StateMismatchError("simulate_raw: expected gamma-srgb source image");
  }
  if (clean.width() % cfa.tile_w() != 0 || clean.height() % cfa.tile_h() != 0) {
    throw ShapeError("simulate_raw: source dimensions are not CFA aligned");
  }
  const Image lit = apply_illuminant(srgb_degamma(clean), meta.illuminant);
  Image device = apply_color_matrix(lit, meta.device_matrix, ColorState::LinearDevice);

  std::optional<Plane> fpn;
  if (meta.fpn) fpn = make_fpn_field(clean.width(), clean.height(), *meta.fpn);
  auto add_fpn = [&](Image& img) {
    if (!fpn) return;
    for (int c = 0; c < Image::kChannels; ++c) {
      auto plane = img.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] += fpn->data[i];
    }
    img.clip();
  };

  if (meta.fpn_before_exposure) add_fpn(device);
  Image exposed = apply_exposure(device, meta.exposure_gain);
  if (meta.shot_snr_db) exposed = add_shot_noise(exposed, *meta.shot_snr_db, meta.noise_seed);
  if (!meta.fpn_before_exposure) add_fpn(exposed);
  exposed.clip();

  RawFrame raw = mosaic(exposed, cfa);
  raw.meta = meta;
  raw.meta.defects.clear();
  if (meta.defect_seed) {
    raw = inject_defects(raw, meta.defect_fraction, *meta.defect_seed);
  }
  Image truth = srgb_gamma(white_balance(lit, meta.illuminant));
  return {std::move(raw), std::move(truth)};
}

}  // namespace dcam
