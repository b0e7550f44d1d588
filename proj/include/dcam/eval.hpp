#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcam/classical_isp.hpp"
#include "dcam/cnn.hpp"
#include "dcam/color.hpp"
#include "dcam/dataset.hpp"
#include "dcam/image.hpp"

namespace dcam {

// Angle between two illuminant directions, degrees.
double angular_error(const Illuminant& est, const Illuminant& gt);

// 10 log10(1 / MSE) over all channels; +inf for identical images.
double psnr(const Image& pred, const Image& ref);

// 10 log10(sum ref^2 / sum (pred - ref)^2); +inf for identical images.
// Throws DegenerateInputError for an all-zero reference.
double snr_db(const Image& pred, const Image& ref);
// Arithmetic mean of per-image SNRs (+inf if any is infinite).
double mean_snr(const std::vector<double>& per_image_db);

// rho_c ~ mean_c(raw_linear) / mean_c(degamma(output)), normalized. Both
// images must be in the same linear space up to a per-channel gain.
Illuminant implied_illuminant(const Image& raw_linear, const Image& output);

// Illuminant a network applied to a raw, in scene space: channel means of
// the bilinear-demosaiced mosaic (CFA site means for non-Bayer patterns),
// mapped through the inverse device matrix, divided by the output's linear
// channel means.
Illuminant implied_illuminant(const RawFrame& raw, const Image& output, const Matrix3& device_matrix);

// Textual form of a value that may be +inf ("inf").
std::string format_metric(double v);

enum class MethodKind { Classical, Cnn, Images };

// One entry of an evaluation request.
//   classical:<cfg.toml>   classical pipeline from a config file, or one of
//                          the presets "baseline" (bilinear, Wiener, gray
//                          world, oracle exposure) and "oracle"
//   cnn:<checkpoint>       network inference
//   images:<dir>           precomputed outputs <dir>/<frame>.pfm
struct EvalMethod {
  std::string label;
  MethodKind kind = MethodKind::Classical;
  std::filesystem::path path;
  PipelineConfig pipeline;
  std::string oracle_flags;  // which stages ran on ground truth
};

EvalMethod parse_method(const std::string& spec);
std::vector<EvalMethod> parse_methods(const std::string& comma_list);

PipelineConfig baseline_pipeline();

struct FrameRow {
  std::size_t method_index = 0;
  std::string method;
  std::string frame;
  bool ok = false;
  double psnr = 0.0;
  double snr = 0.0;
  double angular_error = 0.0;
  std::string error;
};

struct MethodSummary {
  std::string label;
  std::string oracle_flags;
  std::size_t frames = 0;
  std::size_t failures = 0;
  double mean_angular = 0.0;
  double median_angular = 0.0;
  double psnr = 0.0;  // mean over successful frames
  double mean_snr = 0.0;
};

struct EvalReport {
  std::vector<MethodSummary> methods;  // request order
  std::vector<FrameRow> rows;          // frame-major, methods in request order
};

struct EvalOptions {
  int jobs = 1;
  // When set, every output is written as <dir>/<method index>_<label>/<frame>.pfm
  // (exact, readable by images:<dir>) and <frame>.ppm (preview).
  std::optional<std::filesystem::path> save_images;
};

// Scores every method on every frame against the frame's ground truth.
// Failures are recorded per frame and excluded from the means.
EvalReport evaluate_set(const std::vector<ManifestEntry>& frames, const std::vector<EvalMethod>& methods,
                        const EvalOptions& options = {});

// Aggregates rows into per-method summaries (mean/median over ok rows).
std::vector<MethodSummary> summarize(const std::vector<FrameRow>& rows, const std::vector<EvalMethod>& methods);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_report_json(const std::filesystem::path& path, const EvalReport& report);

// Directory name used for a method's saved outputs.
std::string method_dir_name(std::size_t index, const std::string& label);

}  // namespace dcam
