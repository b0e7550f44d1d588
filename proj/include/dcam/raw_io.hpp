#pragma once

#include <filesystem>

#include "dcam/raw_sim.hpp"

namespace dcam {

inline constexpr int kRawFormatVersion = 1;

// Writes `<stem>.raw16` (little-endian u16, value = round(sample * 65535),
// row-major) and `<stem>.json` (dimensions, CFA, format version, SimMeta).
// Returns the sidecar path.
std::filesystem::path write_raw(const std::filesystem::path& stem, const RawFrame& raw);

// Reads a frame given its sidecar path.
RawFrame read_raw(const std::filesystem::path& sidecar);

}  // namespace dcam
