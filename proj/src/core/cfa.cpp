#include "dcam/cfa.hpp"

#include <string>

#include "dcam/error.hpp"

namespace dcam {

CfaPattern::CfaPattern(Name name, int tile_h, int tile_w, std::vector<std::uint8_t> assignment)
    : name_(name), tile_h_(tile_h), tile_w_(tile_w), assignment_(std::move(assignment)) {}

CfaPattern CfaPattern::bayer_rggb() {
  return CfaPattern(Name::BayerRGGB, 2, 2, {0, 1, 1, 2});
}

CfaPattern CfaPattern::xtrans() {
  // Fujifilm X-Trans layout, rows top to bottom.
  constexpr std::uint8_t R = 0, G = 1, B = 2;
  return CfaPattern(Name::XTrans, 6, 6,
                    {G, G, R, G, G, B,  //
                     G, G, B, G, G, R,  //
                     B, R, G, R, B, G,  //
                     G, G, B, G, G, R,  //
                     G, G, R, G, G, B,  //
                     R, B, G, B, R, G});
}

CfaPattern CfaPattern::from_name(std::string_view name) {
  if (name == "bayer" || name == "bayer-rggb" || name == "BayerRGGB") return bayer_rggb();
  if (name == "xtrans" || name == "x-trans" || name == "XTrans") return xtrans();
  throw InvalidArgumentError("unknown CFA pattern '" + std::string(name) + "'");
}

std::string_view CfaPattern::name_string() const {
  return name_ == Name::BayerRGGB ? "BayerRGGB" : "XTrans";
}

std::array<int, 3> CfaPattern::counts() const {
  std::array<int, 3> n{0, 0, 0};
  for (auto c : assignment_) ++n[c];
  return n;
}

}  // namespace dcam
