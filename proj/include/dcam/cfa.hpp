#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dcam {

enum class Channel : std::uint8_t { R = 0, G = 1, B = 2 };

// Periodic tile of color filter assignments.
class CfaPattern {
 public:
  enum class Name { BayerRGGB, XTrans };

  static CfaPattern bayer_rggb();
  static CfaPattern xtrans();
  static CfaPattern from_name(std::string_view name);

  Name name() const { return name_; }
  std::string_view name_string() const;
  int tile_h() const { return tile_h_; }
  int tile_w() const { return tile_w_; }

  // Channel index (0=R, 1=G, 2=B) sampled at image position (y, x).
  int channel_at(int y, int x) const {
    return assignment_[static_cast<std::size_t>(y % tile_h_) * tile_w_ + (x % tile_w_)];
  }

  // Number of R, G, B sites in one tile.
  std::array<int, 3> counts() const;

  bool operator==(const CfaPattern& other) const = default;

 private:
  CfaPattern(Name name, int tile_h, int tile_w, std::vector<std::uint8_t> assignment);

  Name name_;
  int tile_h_;
  int tile_w_;
  std::vector<std::uint8_t> assignment_;
};

}  // namespace dcam
