#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcam/classical_isp.hpp"
#include "dcam/error.hpp"
#include "dcam/filters.hpp"

namespace dcam {

namespace {

// Same-channel samples around (y, x) inside a (2r+1)^2 window, reflecting
// at the frame border.
void gather_same_channel(const RawFrame& raw, int y, int x, int r, bool include_center,
                         std::vector<float>& out) {
  out.clear();
  const int c = raw.channel_at(y, x);
  for (int dy = -r; dy <= r; ++dy) {
    const int ry = reflect_index(y + dy, raw.height());
    for (int dx = -r; dx <= r; ++dx) {
      if (!include_center && dy == 0 && dx == 0) continue;
      const int rx = reflect_index(x + dx, raw.width());
      if (raw.channel_at(ry, rx) == c) out.push_back(raw.at(ry, rx));
    }
  }
}

float median(std::vector<float>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const float upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const float lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5f * (lower + upper);
}

}  // namespace

std::vector<std::uint32_t> detect_defects(const RawFrame& raw, double threshold) {
  std::vector<std::uint32_t> flagged;
  std::vector<float> neigh;
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      gather_same_channel(raw, y, x, 2, false, neigh);
      if (neigh.empty()) continue;
      if (std::abs(raw.at(y, x) - median(neigh)) > threshold) {
        flagged.push_back(static_cast<std::uint32_t>(y * raw.width() + x));
      }
    }
  }
  return flagged;
}

RawFrame correct_defects(const RawFrame& raw, double threshold) {
  RawFrame out = raw;
  std::vector<float> neigh;
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      gather_same_channel(raw, y, x, 2, false, neigh);
      if (neigh.empty()) continue;
      const float m = median(neigh);
      if (std::abs(raw.at(y, x) - m) > threshold) out.at(y, x) = m;
    }
  }
  return out;
}

RawFrame wiener_denoise(const RawFrame& raw, int window, std::optional<double> noise_var) {
  if (window < 3 || window % 2 == 0) throw InvalidArgumentError("wiener window must be odd and >= 3");
  const int r = window / 2;
  const std::size_t n = raw.size();
  std::vector<double> mean(n), var(n);
  std::vector<float> neigh;
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      gather_same_channel(raw, y, x, r, true, neigh);
      double s = 0, s2 = 0;
      for (float v : neigh) s += v;
      const double mu = s / static_cast<double>(neigh.size());
      for (float v : neigh) s2 += (v - mu) * (v - mu);
      const std::size_t i = static_cast<std::size_t>(y) * raw.width() + x;
      mean[i] = mu;
      var[i] = s2 / static_cast<double>(neigh.size());
    }
  }
  const double nv = noise_var ? *noise_var
                              : std::accumulate(var.begin(), var.end(), 0.0) / static_cast<double>(n);
  RawFrame out = raw;
  auto src = raw.mosaic();
  auto dst = out.mosaic();
  constexpr double kEps = 1e-12;
  for (std::size_t i = 0; i < n; ++i) {
    const double gain = std::max(var[i] - nv, 0.0) / std::max(var[i], kEps);
    dst[i] = static_cast<float>(mean[i] + gain * (src[i] - mean[i]));
  }
  return out;
}

double oracle_noise_variance(const RawFrame& raw) {
  double v = 0;
  if (raw.meta.shot_snr_db && std::isfinite(*raw.meta.shot_snr_db)) {
    const double sigma = shot_noise_sigma(*raw.meta.shot_snr_db);
    double power = 0;
    for (float s : raw.mosaic()) power += static_cast<double>(s) * s;
    v += sigma * sigma * power / static_cast<double>(raw.size());
  }
  if (raw.meta.fpn) {
    const auto& f = *raw.meta.fpn;
    v += f.gauss_sigma * f.gauss_sigma + 0.5 * f.row_amp * f.row_amp + 0.5 * f.col_amp * f.col_amp;
  }
  return v;
}

}  // namespace dcam
