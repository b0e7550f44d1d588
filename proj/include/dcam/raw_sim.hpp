#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dcam/cfa.hpp"
#include "dcam/color.hpp"
#include "dcam/image.hpp"

namespace dcam {

// Row/column sinusoidal fixed-pattern noise with a Gaussian offset layer.
// Amplitudes and sigma are in normalized [0,1] sample units.
struct FpnParams {
  double row_amp = 0.005;
  double col_amp = 0.005;
  double row_freq = 1.0 / 32.0;  // cycles per pixel, down the rows (varies with y)
  double col_freq = 1.0 / 48.0;  // cycles per pixel, across columns (varies with x)
  double row_phase = 0.0;
  double col_phase = 0.0;
  double gauss_sigma = 0.003;
  std::uint64_t seed = 0;

  bool operator==(const FpnParams&) const = default;
};

struct DefectSite {
  std::uint32_t index;  // row-major site index
  float value;          // 0.0 (stuck low) or 1.0 (stuck high)

  bool operator==(const DefectSite&) const = default;
};

// Everything needed to reproduce one simulated frame.
struct SimMeta {
  Illuminant illuminant = Illuminant::neutral();
  Matrix3 device_matrix = identity_matrix();  // linear sRGB -> device RGB
  double exposure_gain = 1.0;
  std::optional<double> shot_snr_db;  // absent: no shot noise
  std::uint64_t noise_seed = 0;
  std::optional<FpnParams> fpn;  // absent: no fixed-pattern noise
  bool fpn_before_exposure = false;
  std::optional<std::uint64_t> defect_seed;  // absent: no defects
  double defect_fraction = 0.0;
  std::vector<DefectSite> defects;  // filled by inject_defects

  bool operator==(const SimMeta&) const = default;
};

class RawFrame {
 public:
  // Zero-filled mosaic. Throws ShapeError unless width/height are positive
  // multiples of the CFA tile.
  RawFrame(int width, int height, CfaPattern cfa);

  int width() const { return width_; }
  int height() const { return height_; }
  const CfaPattern& cfa() const { return cfa_; }
  std::size_t size() const { return mosaic_.size(); }

  float at(int y, int x) const { return mosaic_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int y, int x) { return mosaic_[static_cast<std::size_t>(y) * width_ + x]; }
  int channel_at(int y, int x) const { return cfa_.channel_at(y, x); }

  std::span<const float> mosaic() const { return mosaic_; }
  std::span<float> mosaic() { return mosaic_; }

  SimMeta meta;

  bool operator==(const RawFrame&) const = default;

 private:
  int width_;
  int height_;
  CfaPattern cfa_;
  std::vector<float> mosaic_;
};

// Multiplies every sample by gain and clips. Input must be linear-device.
Image apply_exposure(const Image& img, double gain);

// Per-unit-signal noise sigma for a multiplicative model at the given SNR.
double shot_noise_sigma(double snr_db);

// s -> clip(s * (1 + n)), n ~ Normal(0, sigma^2), i.i.d. per sample.
// snr_db = +inf leaves the image unchanged.
Image add_shot_noise(const Image& img, double snr_db, std::uint64_t seed);

Plane make_fpn_field(int width, int height, const FpnParams& params);

// Samples the channel selected by the CFA at every site.
RawFrame mosaic(const Image& img, const CfaPattern& cfa);

// Sets round(fraction * N) distinct, uniformly chosen sites to 0 or 1 (every
// chosen site changes value) and records them in meta.defects.
RawFrame inject_defects(const RawFrame& raw, double fraction, std::uint64_t seed);

// Number of defect sites inject_defects produces (round half up).
std::size_t defect_count(double fraction, std::size_t sites);

// Multiplies linear channels by the illuminant's green-relative gains.
Image apply_illuminant(const Image& linear, const Illuminant& illum);

struct SimResult {
  RawFrame raw;
  Image ground_truth;  // gamma-sRGB, white balanced
};

// Full forward model. Stages: degamma -> illuminant -> device matrix ->
// exposure -> shot noise -> FPN -> clip -> mosaic -> defects. The FPN stage
// moves ahead of exposure when meta.fpn_before_exposure is set. The returned
// raw frame carries a copy of `meta` with the defect map filled in.
SimResult simulate_raw(const Image& clean, const SimMeta& meta, const CfaPattern& cfa);

}  // namespace dcam
