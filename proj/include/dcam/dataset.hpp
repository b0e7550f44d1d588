#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcam/cfa.hpp"
#include "dcam/color.hpp"
#include "dcam/raw_sim.hpp"

namespace dcam {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

struct ManifestEntry {
  std::filesystem::path raw_path;  // raw sidecar (.json)
  std::filesystem::path gt_path;   // ground truth, 16-bit PPM, gamma sRGB
  Split split = Split::Train;
  std::uint64_t seed = 0;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  // paths resolved against the manifest's directory

  std::vector<ManifestEntry> split(Split s) const;
};

// Writes entries with paths relative to the manifest's directory.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& path);

// Train/val/test counts for n frames: val and test are round(n * r / sum),
// train takes the remainder.
std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios);

// Default device matrix for simulated sensors (rows sum to one so neutral
// stays neutral). Stands in for a measured sensor calibration.
Matrix3 default_device_matrix();

struct DatasetConfig {
  std::vector<double> snr_levels_db{25.0, 30.0};
  std::vector<double> exposures{0.5, 1.0, 2.0};  // short, medium, long
  int crops = 4;
  int crop_width = 240;
  int crop_height = 220;
  CfaPattern cfa = CfaPattern::bayer_rggb();
  std::array<double, 3> split_ratios{15.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  Matrix3 device_matrix = default_device_matrix();
  std::optional<FpnParams> fpn = FpnParams{};  // seed is derived per dataset
  bool fpn_before_exposure = false;
  double defect_fraction = 1e-4;
  // Per-scene illuminant: R and B gains relative to G drawn from
  // [1 - spread, 1 + spread].
  double illuminant_spread = 0.3;
  int jobs = 1;
};

struct DatasetResult {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::vector<std::string> warnings;  // unreadable or undersized sources
};

// For every *.ppm in src_dir (sorted by name): K aligned crops, each
// simulated at every (SNR, exposure) pair. Writes raws, ground truths and
// out_dir/manifest.json. Throws InvalidArgumentError when no source is usable.
DatasetResult build_dataset(const std::filesystem::path& src_dir,
                            const std::filesystem::path& out_dir, const DatasetConfig& cfg);

}  // namespace dcam
