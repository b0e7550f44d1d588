#pragma once

#include <filesystem>

#include "dcam/image.hpp"

namespace dcam {

// Binary PPM (P6), maxval 255 or 65535. Samples are read as-is into [0,1]
// and tagged with `state`; PPM carries no color-state information.
Image read_ppm(const std::filesystem::path& path, ColorState state = ColorState::GammaSRGB);
void write_ppm8(const std::filesystem::path& path, const Image& img);
void write_ppm16(const std::filesystem::path& path, const Image& img);

// Single-channel 8-bit PGM (P5), for mosaic previews.
void write_pgm8(const std::filesystem::path& path, const Plane& plane);

// Portable float map (PF, little-endian, bottom-to-top rows). Lossless for
// float samples, used wherever a later step must reproduce exact numbers.
Image read_pfm(const std::filesystem::path& path, ColorState state);
void write_pfm(const std::filesystem::path& path, const Image& img);

}  // namespace dcam
