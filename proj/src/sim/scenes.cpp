#include "dcam/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dcam/error.hpp"
#include "dcam/image_io.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace {

using Rgb = std::array<double, 3>;

Rgb random_color(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

// Mostly achromatic modulation with a small chroma part: channels of natural
// images vary together.
Rgb correlated_delta(Rng& rng, double lum, double chroma) {
  const double l = rng.uniform(-lum, lum);
  return {l + rng.uniform(-chroma, chroma), l + rng.uniform(-chroma, chroma), l + rng.uniform(-chroma, chroma)};
}

double smoothstep(double edge_width, double signed_dist) {
  const double t = std::clamp(0.5 - signed_dist / edge_width, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Image generate_scene(int width, int height, std::uint64_t seed, SceneKind kind) {
  if (width <= 0 || height <= 0) throw ShapeError("generate_scene: dimensions must be positive");
  Rng rng(seed);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double scale = std::min(width, height);

  // Corner tint shared by the four corners, each with its own gray level.
  const Rgb tint = random_color(rng, -0.12, 0.12);
  std::array<Rgb, 4> corners;
  for (auto& c : corners) {
    const double l = rng.uniform(0.25, 0.75);
    const Rgb d = random_color(rng, -0.04, 0.04);
    for (std::size_t k = 0; k < 3; ++k) c[k] = l + tint[k] + d[k];
  }

  struct Wave {
    Rgb amp;
    double fx, fy, phase;
  };
  std::array<Wave, 2> waves;
  for (auto& w : waves) {
    const double cycles = rng.uniform(0.5, 2.0);
    const double angle = rng.uniform(0.0, kTwoPi);
    w = {correlated_delta(rng, 0.08, 0.015), cycles * std::cos(angle) / scale,
         cycles * std::sin(angle) / scale, rng.uniform(0.0, kTwoPi)};
  }

  struct Blob {
    double cx, cy, sigma;
    Rgb delta;
  };
  std::array<Blob, 3> blobs;
  for (auto& b : blobs) {
    b = {rng.uniform(0.0, width), rng.uniform(0.0, height), rng.uniform(0.1, 0.3) * scale,
         correlated_delta(rng, 0.25, 0.04)};
  }

  struct Shape {
    bool disk;
    double cx, cy, a, b;
    Rgb color;
  };
  std::vector<Shape> shapes;
  if (kind == SceneKind::Textured) {
    const int n = 4 + static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
      Shape s;
      s.disk = rng.below(2) == 0;
      s.cx = rng.uniform(0.0, width);
      s.cy = rng.uniform(0.0, height);
      s.a = rng.uniform(0.06, 0.25) * scale;
      s.b = rng.uniform(0.06, 0.25) * scale;
      s.color = random_color(rng, 0.05, 0.95);
      shapes.push_back(s);
    }
  }

  Image img(width, height, ColorState::GammaSRGB);
  for (int y = 0; y < height; ++y) {
    const double v = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    for (int x = 0; x < width; ++x) {
      const double u = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
      Rgb px;
      for (std::size_t c = 0; c < 3; ++c) {
        px[c] = (1 - u) * (1 - v) * corners[0][c] + u * (1 - v) * corners[1][c] +
                (1 - u) * v * corners[2][c] + u * v * corners[3][c];
      }
      for (const auto& w : waves) {
        const double s = std::sin(kTwoPi * (w.fx * x + w.fy * y) + w.phase);
        for (std::size_t c = 0; c < 3; ++c) px[c] += w.amp[c] * s;
      }
      for (const auto& b : blobs) {
        const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
        const double g = std::exp(-0.5 * d2 / (b.sigma * b.sigma));
        for (std::size_t c = 0; c < 3; ++c) px[c] += b.delta[c] * g;
      }
      for (const auto& s : shapes) {
        double dist;
        if (s.disk) {
          dist = std::hypot(x - s.cx, (y - s.cy) * s.a / s.b) - s.a;
        } else {
          dist = std::max(std::abs(x - s.cx) - s.a, std::abs(y - s.cy) - s.b);
        }
        const double cover = smoothstep(2.0, dist);
        for (std::size_t c = 0; c < 3; ++c) px[c] = (1 - cover) * px[c] + cover * s.color[c];
      }
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = static_cast<float>(std::clamp(px[static_cast<std::size_t>(c)], 0.02, 0.98));
      }
    }
  }
  return img;
}

std::vector<std::filesystem::path> write_scene_corpus(const std::filesystem::path& dir, int count,
                                                      int width, int height, std::uint64_t seed,
                                                      SceneKind kind) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d.ppm", i);
    const auto path = dir / name;
    write_ppm8(path, generate_scene(width, height, derive_seed(seed, name), kind));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace dcam
