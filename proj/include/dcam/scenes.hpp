#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcam/image.hpp"

namespace dcam {

enum class SceneKind {
  Smooth,    // corner gradients, low-frequency color waves, broad blobs
  Textured,  // Smooth plus soft-edged disks and rectangles
};

// Procedural gamma-sRGB scene; a pure function of (w, h, seed, kind).
Image generate_scene(int width, int height, std::uint64_t seed, SceneKind kind);

// Writes `count` scenes as 8-bit PPMs named scene_000.ppm, ... into dir.
std::vector<std::filesystem::path> write_scene_corpus(const std::filesystem::path& dir, int count,
                                                      int width, int height, std::uint64_t seed,
                                                      SceneKind kind);

}  // namespace dcam
