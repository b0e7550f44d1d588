#include "dcam/raw_io.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "dcam/error.hpp"

namespace dcam {

namespace {

using nlohmann::json;

json fpn_to_json(const FpnParams& p) {
  return {{"row_amp", p.row_amp},     {"col_amp", p.col_amp},       {"row_freq", p.row_freq},
          {"col_freq", p.col_freq},   {"row_phase", p.row_phase},   {"col_phase", p.col_phase},
          {"gauss_sigma", p.gauss_sigma}, {"seed", p.seed}};
}

FpnParams fpn_from_json(const json& j) {
  FpnParams p;
  p.row_amp = j.at("row_amp").get<double>();
  p.col_amp = j.at("col_amp").get<double>();
  p.row_freq = j.at("row_freq").get<double>();
  p.col_freq = j.at("col_freq").get<double>();
  p.row_phase = j.at("row_phase").get<double>();
  p.col_phase = j.at("col_phase").get<double>();
  p.gauss_sigma = j.at("gauss_sigma").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json meta_to_json(const SimMeta& m) {
  json defects = json::array();
  for (const auto& d : m.defects) defects.push_back({d.index, d.value});
  return {
      {"illuminant", m.illuminant.rgb()},
      {"device_matrix", m.device_matrix},
      {"exposure_gain", m.exposure_gain},
      {"shot_snr_db", m.shot_snr_db ? json(*m.shot_snr_db) : json(nullptr)},
      {"noise_seed", m.noise_seed},
      {"fpn", m.fpn ? fpn_to_json(*m.fpn) : json(nullptr)},
      {"fpn_before_exposure", m.fpn_before_exposure},
      {"defect_seed", m.defect_seed ? json(*m.defect_seed) : json(nullptr)},
      {"defect_fraction", m.defect_fraction},
      {"defects", defects},
  };
}

SimMeta meta_from_json(const json& j) {
  SimMeta m;
  m.illuminant = Illuminant(j.at("illuminant").get<Vec3>());
  m.device_matrix = j.at("device_matrix").get<Matrix3>();
  m.exposure_gain = j.at("exposure_gain").get<double>();
  if (!j.at("shot_snr_db").is_null()) m.shot_snr_db = j.at("shot_snr_db").get<double>();
  m.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  if (!j.at("fpn").is_null()) m.fpn = fpn_from_json(j.at("fpn"));
  m.fpn_before_exposure = j.at("fpn_before_exposure").get<bool>();
  if (!j.at("defect_seed").is_null()) m.defect_seed = j.at("defect_seed").get<std::uint64_t>();
  m.defect_fraction = j.at("defect_fraction").get<double>();
  for (const auto& d : j.at("defects")) {
    m.defects.push_back({d.at(0).get<std::uint32_t>(), d.at(1).get<float>()});
  }
  return m;
}

}  // namespace

std::filesystem::path write_raw(const std::filesystem::path& stem, const RawFrame& raw) {
  auto samples_path = stem;
  samples_path += ".raw16";
  auto sidecar_path = stem;
  sidecar_path += ".json";

  std::vector<unsigned char> bytes(raw.size() * 2);
  const auto mosaic = raw.mosaic();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(
        std::lround(std::clamp(static_cast<double>(mosaic[i]), 0.0, 1.0) * 65535.0));
    bytes[2 * i] = static_cast<unsigned char>(v & 0xff);
    bytes[2 * i + 1] = static_cast<unsigned char>(v >> 8);
  }
  {
    std::ofstream out(samples_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + samples_path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + samples_path.string());
  }

  const json sidecar = {
      {"format_version", kRawFormatVersion},
      {"width", raw.width()},
      {"height", raw.height()},
      {"cfa", std::string(raw.cfa().name_string())},
      {"samples", samples_path.filename().string()},
      {"meta", meta_to_json(raw.meta)},
  };
  std::ofstream out(sidecar_path);
  if (!out) throw IoError("cannot write " + sidecar_path.string());
  out << sidecar.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + sidecar_path.string());
  return sidecar_path;
}

RawFrame read_raw(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open raw sidecar " + sidecar.string());
  json j;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != kRawFormatVersion) {
      throw IoError("unsupported raw format version in " + sidecar.string());
    }
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    RawFrame raw(w, h, CfaPattern::from_name(j.at("cfa").get<std::string>()));
    raw.meta = meta_from_json(j.at("meta"));

    const auto samples_path = sidecar.parent_path() / j.at("samples").get<std::string>();
    std::ifstream bin(samples_path, std::ios::binary);
    if (!bin) throw IoError("cannot open raw samples " + samples_path.string());
    std::vector<unsigned char> bytes(raw.size() * 2);
    bin.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (bin.gcount() != static_cast<std::streamsize>(bytes.size())) {
      throw IoError("truncated raw samples in " + samples_path.string());
    }
    auto mosaic = raw.mosaic();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const unsigned v = unsigned{bytes[2 * i]} | (unsigned{bytes[2 * i + 1]} << 8);
      mosaic[i] = static_cast<float>(v / 65535.0);
    }
    return raw;
  } catch (const json::exception& e) {
    throw IoError("malformed raw sidecar " + sidecar.string() + ": " + e.what());
  }
}

}  // namespace dcam
