#pragma once

#include <span>
#include <vector>

namespace dcam {

// Mirror index into [0, n) without repeating the edge sample
// (-1 -> 1, n -> n-2). Preserves index parity, so CFA phase survives padding.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Normalized 1-D Gaussian taps with radius ceil(3 sigma). sigma == 0 yields {1}.
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur of a row-major w x h plane with reflective borders.
std::vector<double> gaussian_blur(std::span<const double> src, int w, int h, double sigma);

}  // namespace dcam
