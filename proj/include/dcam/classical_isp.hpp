#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcam/color.hpp"
#include "dcam/config.hpp"
#include "dcam/image.hpp"
#include "dcam/raw_sim.hpp"

namespace dcam {

inline constexpr double kDefaultDefectThreshold = 0.1;

// Flags a site when it differs from the median of its same-channel
// neighbours in the surrounding 5x5 window by more than `threshold`, and
// replaces flagged sites with that median.
RawFrame correct_defects(const RawFrame& raw, double threshold = kDefaultDefectThreshold);

// Sites correct_defects would flag, row-major indices.
std::vector<std::uint32_t> detect_defects(const RawFrame& raw, double threshold = kDefaultDefectThreshold);

// Local adaptive Wiener filter over same-channel samples in a window x window
// neighbourhood. Without noise_var, the noise power is taken as the mean
// local variance over the frame.
RawFrame wiener_denoise(const RawFrame& raw, int window = 5,
                        std::optional<double> noise_var = std::nullopt);

// Noise variance implied by a frame's simulation metadata (shot noise at the
// frame's mean signal power plus FPN power). Zero for a noise-free frame.
double oracle_noise_variance(const RawFrame& raw);

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

// Minkowski p-mean of each channel, normalized. p = 1 is gray world, p = 6
// shades of gray, p = infinity white patch (channel maximum).
// Throws DegenerateInputError when any channel's p-mean is zero.
Illuminant estimate_illuminant_minkowski(const Image& img, double p);

// Minkowski p-mean of per-channel gradient magnitudes after Gaussian
// smoothing with `sigma` (central differences, reflective borders).
Illuminant estimate_illuminant_gray_edge(const Image& img, double p = 1.0, double sigma = 1.0);

// Bayer only. Missing samples are the mean of the nearest same-channel sites.
Image demosaic_bilinear(const RawFrame& raw);

// Bayer only; width and height >= 6. Malvar-He-Cutler 5x5 gradient-corrected
// linear filters, output clipped to [0,1].
Image demosaic_malvar(const RawFrame& raw);

enum class DemosaicMethod { Bilinear, Malvar };
enum class IlluminantMethod { GrayWorld, ShadesOfGray, WhitePatch, Minkowski, GrayEdge, Oracle };
enum class ExposureMode { Auto, Oracle };
enum class NoiseMode { Estimate, Oracle, Fixed, Off };

struct PipelineConfig {
  bool correct_defects = true;
  double defect_threshold = kDefaultDefectThreshold;
  NoiseMode noise = NoiseMode::Estimate;
  double noise_var = 0.0;  // used with NoiseMode::Fixed
  int wiener_window = 5;
  DemosaicMethod demosaic = DemosaicMethod::Malvar;
  ExposureMode exposure = ExposureMode::Auto;
  double target_luminance = 0.18;
  IlluminantMethod illuminant = IlluminantMethod::GrayWorld;
  double minkowski_p = 6.0;  // ShadesOfGray / Minkowski
  double gray_edge_p = 1.0;
  double gray_edge_sigma = 1.0;
  // Linear sRGB -> device matrix of the sensor; the pipeline applies its
  // inverse. Absent: taken from the frame's metadata.
  std::optional<Matrix3> device_matrix;

  // Ground-truth exposure, illuminant and noise level, as used for the
  // fair-comparison protocol.
  static PipelineConfig oracle();

  // Builds from a KeyValueConfig; unknown names raise InvalidArgumentError.
  static PipelineConfig from_config(const KeyValueConfig& kv);
};

DemosaicMethod demosaic_from_string(std::string_view name);
IlluminantMethod illuminant_method_from_string(std::string_view name);
std::string_view to_string(DemosaicMethod m);
std::string_view to_string(IlluminantMethod m);

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> params;
};

struct PipelineResult {
  Image image;                          // gamma sRGB
  Illuminant device_illuminant;         // illuminant used for white balance (device RGB)
  Illuminant scene_illuminant;          // same, mapped back to linear sRGB
  std::vector<StageRecord> provenance;  // stages in execution order
};

// Maps a device-space illuminant direction into linear sRGB through the
// inverse device matrix. Falls back to the device direction when the mapped
// vector has a non-positive component.
Illuminant device_to_scene_illuminant(const Illuminant& device, const Matrix3& device_matrix);
Illuminant scene_to_device_illuminant(const Illuminant& scene, const Matrix3& device_matrix);

PipelineResult run_classical_pipeline(const RawFrame& raw, const PipelineConfig& cfg);

}  // namespace dcam
