#include <algorithm>
#include <array>

#include "dcam/classical_isp.hpp"
#include "dcam/error.hpp"
#include "dcam/filters.hpp"

namespace dcam {

namespace {

using Kernel5 = std::array<std::array<double, 5>, 5>;

void require_bayer(const RawFrame& raw, const char* op) {
  if (raw.cfa().name() != CfaPattern::Name::BayerRGGB) {
    throw UnsupportedCfaError(std::string(op) + " supports Bayer RGGB only, got " +
                              std::string(raw.cfa().name_string()));
  }
}

// Malvar-He-Cutler filters, already divided by 8. Rows are dy = -2..2.
constexpr Kernel5 scaled(const Kernel5& k) {
  Kernel5 out{};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) out[i][j] = k[i][j] / 8.0;
  return out;
}

constexpr Kernel5 transposed(const Kernel5& k) {
  Kernel5 out{};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) out[i][j] = k[j][i];
  return out;
}

// G at an R or B site.
constexpr Kernel5 kGreenAtRB = scaled({{{0, 0, -1, 0, 0},
                                        {0, 0, 2, 0, 0},
                                        {-1, 2, 4, 2, -1},
                                        {0, 0, 2, 0, 0},
                                        {0, 0, -1, 0, 0}}});
// R (or B) at a G site whose horizontal neighbours are R (or B).
constexpr Kernel5 kRowNeighbours = scaled({{{0, 0, 0.5, 0, 0},
                                            {0, -1, 0, -1, 0},
                                            {-1, 4, 5, 4, -1},
                                            {0, -1, 0, -1, 0},
                                            {0, 0, 0.5, 0, 0}}});
// R (or B) at a G site whose vertical neighbours are R (or B).
constexpr Kernel5 kColumnNeighbours = transposed(kRowNeighbours);
// R at a B site, or B at an R site.
constexpr Kernel5 kDiagonal = scaled({{{0, 0, -1.5, 0, 0},
                                       {0, 2, 0, 2, 0},
                                       {-1.5, 0, 6, 0, -1.5},
                                       {0, 2, 0, 2, 0},
                                       {0, 0, -1.5, 0, 0}}});

double correlate(const RawFrame& raw, int y, int x, const Kernel5& k) {
  double acc = 0;
  for (int dy = -2; dy <= 2; ++dy) {
    const int ry = reflect_index(y + dy, raw.height());
    for (int dx = -2; dx <= 2; ++dx) {
      const double coeff = k[static_cast<std::size_t>(dy + 2)][static_cast<std::size_t>(dx + 2)];
      if (coeff == 0) continue;
      acc += coeff * raw.at(ry, reflect_index(x + dx, raw.width()));
    }
  }
  return acc;
}

}  // namespace

Image demosaic_bilinear(const RawFrame& raw) {
  require_bayer(raw, "demosaic_bilinear");
  Image out(raw.width(), raw.height(), ColorState::LinearDevice);
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      const int native = raw.channel_at(y, x);
      std::array<double, 3> sum{0, 0, 0};
      std::array<int, 3> count{0, 0, 0};
      for (int dy = -1; dy <= 1; ++dy) {
        const int ry = reflect_index(y + dy, raw.height());
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int rx = reflect_index(x + dx, raw.width());
          const auto c = static_cast<std::size_t>(raw.channel_at(ry, rx));
          sum[c] += raw.at(ry, rx);
          ++count[c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        out.at(c, y, x) = c == native ? raw.at(y, x) : static_cast<float>(sum[cu] / count[cu]);
      }
    }
  }
  return out;
}

Image demosaic_malvar(const RawFrame& raw) {
  require_bayer(raw, "demosaic_malvar");
  if (raw.width() < 6 || raw.height() < 6) throw ShapeError("demosaic_malvar needs at least 6x6");
  Image out(raw.width(), raw.height(), ColorState::LinearDevice);
  auto put = [&](int c, int y, int x, double v) {
    out.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
  };
  for (int y = 0; y < raw.height(); ++y) {
    const bool red_row = y % 2 == 0;
    for (int x = 0; x < raw.width(); ++x) {
      const double v = raw.at(y, x);
      switch (raw.channel_at(y, x)) {
        case 0:  // R site
          put(0, y, x, v);
          put(1, y, x, correlate(raw, y, x, kGreenAtRB));
          put(2, y, x, correlate(raw, y, x, kDiagonal));
          break;
        case 2:  // B site
          put(0, y, x, correlate(raw, y, x, kDiagonal));
          put(1, y, x, correlate(raw, y, x, kGreenAtRB));
          put(2, y, x, v);
          break;
        default:  // G site: R row has R to the left/right, B row has B
          put(1, y, x, v);
          put(0, y, x, correlate(raw, y, x, red_row ? kRowNeighbours : kColumnNeighbours));
          put(2, y, x, correlate(raw, y, x, red_row ? kColumnNeighbours : kRowNeighbours));
          break;
      }
    }
  }
  return out;
}

}  // namespace dcam
