#include "dcam/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed header in " + path.string());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::uint16_t quantize16(float v) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 65535.0f));
}

std::uint8_t quantize8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Image read_ppm(const std::filesystem::path& path, ColorState state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P6") throw IoError(path.string() + " is not a binary PPM (P6)");
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (maxval > 65535) throw IoError("unsupported PPM maxval in " + path.string());
  const bool wide = maxval > 255;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<unsigned char> bytes(n * 3 * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError("truncated pixel data in " + path.string());
  }
  Image img(w, h, state);
  const float scale = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::size_t k = i * 3 + static_cast<std::size_t>(c);
      const unsigned v = wide ? (unsigned{bytes[2 * k]} << 8) | bytes[2 * k + 1] : bytes[k];
      img.plane(c)[i] = std::min(1.0f, static_cast<float>(v) * scale);
    }
  }
  return img;
}

void write_ppm8(const std::filesystem::path& path, const Image& img) {
  auto out = open_out(path);
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<std::uint8_t> bytes(img.pixel_count() * 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) bytes[i * 3 + static_cast<std::size_t>(c)] = quantize8(img.plane(c)[i]);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_ppm16(const std::filesystem::path& path, const Image& img) {
  auto out = open_out(path);
  out << "P6\n" << img.width() << " " << img.height() << "\n65535\n";
  std::vector<std::uint8_t> bytes(img.pixel_count() * 6);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint16_t v = quantize16(img.plane(c)[i]);
      const std::size_t k = (i * 3 + static_cast<std::size_t>(c)) * 2;
      bytes[k] = static_cast<std::uint8_t>(v >> 8);
      bytes[k + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_pgm8(const std::filesystem::path& path, const Plane& plane) {
  auto out = open_out(path);
  out << "P5\n" << plane.width << " " << plane.height << "\n255\n";
  std::vector<std::uint8_t> bytes(plane.data.size());
  std::transform(plane.data.begin(), plane.data.end(), bytes.begin(), quantize8);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Image read_pfm(const std::filesystem::path& path, ColorState state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "PF") throw IoError(path.string() + " is not a color PFM");
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const std::string scale_tok = header_token(in);
  if (scale_tok.empty() || scale_tok.front() != '-') {
    throw IoError("only little-endian PFM is supported: " + path.string());
  }
  std::vector<float> rows(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  in.read(reinterpret_cast<char*>(rows.data()), static_cast<std::streamsize>(rows.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(rows.size() * 4)) {
    throw IoError("truncated PFM data in " + path.string());
  }
  static_assert(std::endian::native == std::endian::little, "PFM reader assumes little-endian host");
  Image img(w, h, state);
  for (int y = 0; y < h; ++y) {
    const std::size_t src_row = static_cast<std::size_t>(h - 1 - y) * static_cast<std::size_t>(w) * 3;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = rows[src_row + static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)];
    }
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  auto out = open_out(path);
  out << "PF\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const int w = img.width(), h = img.height();
  std::vector<float> rows(img.pixel_count() * 3);
  for (int y = 0; y < h; ++y) {
    const std::size_t dst_row = static_cast<std::size_t>(h - 1 - y) * static_cast<std::size_t>(w) * 3;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) rows[dst_row + static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] = img.at(c, y, x);
    }
  }
  out.write(reinterpret_cast<const char*>(rows.data()), static_cast<std::streamsize>(rows.size() * 4));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dcam
