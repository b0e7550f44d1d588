#include <cmath>
#include <sstream>

#include "dcam/classical_isp.hpp"
#include "dcam/error.hpp"

namespace dcam {

namespace {

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

NoiseMode noise_mode_from_string(std::string_view name) {
  if (name == "estimate") return NoiseMode::Estimate;
  if (name == "oracle") return NoiseMode::Oracle;
  if (name == "off") return NoiseMode::Off;
  throw InvalidArgumentError("unknown noise mode '" + std::string(name) + "'");
}

std::string_view to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::Estimate:
      return "estimate";
    case NoiseMode::Oracle:
      return "oracle";
    case NoiseMode::Fixed:
      return "fixed";
    case NoiseMode::Off:
      return "off";
  }
  return "estimate";
}

Matrix3 matrix_from_list(const std::vector<double>& v) {
  if (v.size() != 9) throw InvalidArgumentError("device_matrix needs 9 values (row-major)");
  Matrix3 m;
  for (std::size_t i = 0; i < 9; ++i) m[i / 3][i % 3] = v[i];
  return m;
}

}  // namespace

DemosaicMethod demosaic_from_string(std::string_view name) {
  if (name == "bilinear") return DemosaicMethod::Bilinear;
  if (name == "malvar") return DemosaicMethod::Malvar;
  throw InvalidArgumentError("unknown demosaic method '" + std::string(name) + "'");
}

IlluminantMethod illuminant_method_from_string(std::string_view name) {
  if (name == "grayworld" || name == "gray-world") return IlluminantMethod::GrayWorld;
  if (name == "shades-of-gray" || name == "shadesofgray") return IlluminantMethod::ShadesOfGray;
  if (name == "white-patch" || name == "whitepatch") return IlluminantMethod::WhitePatch;
  if (name == "minkowski") return IlluminantMethod::Minkowski;
  if (name == "gray-edge" || name == "grayedge") return IlluminantMethod::GrayEdge;
  if (name == "oracle") return IlluminantMethod::Oracle;
  throw InvalidArgumentError("unknown white-balance method '" + std::string(name) + "'");
}

std::string_view to_string(DemosaicMethod m) {
  return m == DemosaicMethod::Bilinear ? "bilinear" : "malvar";
}

std::string_view to_string(IlluminantMethod m) {
  switch (m) {
    case IlluminantMethod::GrayWorld:
      return "grayworld";
    case IlluminantMethod::ShadesOfGray:
      return "shades-of-gray";
    case IlluminantMethod::WhitePatch:
      return "white-patch";
    case IlluminantMethod::Minkowski:
      return "minkowski";
    case IlluminantMethod::GrayEdge:
      return "gray-edge";
    case IlluminantMethod::Oracle:
      return "oracle";
  }
  return "grayworld";
}

PipelineConfig PipelineConfig::oracle() {
  PipelineConfig cfg;
  cfg.noise = NoiseMode::Oracle;
  cfg.exposure = ExposureMode::Oracle;
  cfg.illuminant = IlluminantMethod::Oracle;
  return cfg;
}

PipelineConfig PipelineConfig::from_config(const KeyValueConfig& kv) {
  PipelineConfig cfg;
  if (auto v = kv.get_bool("correct_defects")) cfg.correct_defects = *v;
  if (auto v = kv.get_double("defect_threshold")) cfg.defect_threshold = *v;
  if (auto v = kv.get_string("noise")) {
    if (auto fixed = kv.get_double("noise_var"); fixed && *v == "fixed") {
      cfg.noise = NoiseMode::Fixed;
      cfg.noise_var = *fixed;
    } else {
      cfg.noise = noise_mode_from_string(*v);
    }
  }
  if (auto v = kv.get_int("wiener_window")) cfg.wiener_window = static_cast<int>(*v);
  if (auto v = kv.get_string("demosaic")) cfg.demosaic = demosaic_from_string(*v);
  if (auto v = kv.get_string("exposure")) {
    if (*v == "oracle") {
      cfg.exposure = ExposureMode::Oracle;
    } else if (*v == "auto") {
      cfg.exposure = ExposureMode::Auto;
    } else {
      throw InvalidArgumentError("unknown exposure mode '" + *v + "'");
    }
  }
  if (auto v = kv.get_double("target_luminance")) cfg.target_luminance = *v;
  if (auto v = kv.get_string("wb")) cfg.illuminant = illuminant_method_from_string(*v);
  if (auto v = kv.get_double("p")) cfg.minkowski_p = *v;
  if (auto v = kv.get_double("gray_edge_p")) cfg.gray_edge_p = *v;
  if (auto v = kv.get_double("gray_edge_sigma")) cfg.gray_edge_sigma = *v;
  if (auto v = kv.get_doubles("device_matrix")) cfg.device_matrix = matrix_from_list(*v);
  if (cfg.wiener_window < 3 || cfg.wiener_window % 2 == 0) {
    throw InvalidArgumentError("wiener_window must be odd and >= 3");
  }
  return cfg;
}

Illuminant device_to_scene_illuminant(const Illuminant& device, const Matrix3& device_matrix) {
  const Vec3 v = multiply(inverse(device_matrix), device.rgb());
  if (v[0] > 0 && v[1] > 0 && v[2] > 0) return Illuminant(v);
  return device;
}

Illuminant scene_to_device_illuminant(const Illuminant& scene, const Matrix3& device_matrix) {
  const Vec3 v = multiply(device_matrix, scene.rgb());
  if (v[0] > 0 && v[1] > 0 && v[2] > 0) return Illuminant(v);
  return scene;
}

PipelineResult run_classical_pipeline(const RawFrame& input, const PipelineConfig& cfg) {
  const Matrix3 device_matrix = cfg.device_matrix.value_or(input.meta.device_matrix);
  std::vector<StageRecord> prov;
  RawFrame raw = input;

  if (cfg.correct_defects) {
    raw = correct_defects(raw, cfg.defect_threshold);
    prov.push_back({"correct_defects", {{"threshold", num(cfg.defect_threshold)}}});
  }

  if (cfg.noise != NoiseMode::Off) {
    std::optional<double> nv;
    if (cfg.noise == NoiseMode::Oracle) nv = oracle_noise_variance(input);
    if (cfg.noise == NoiseMode::Fixed) nv = cfg.noise_var;
    raw = wiener_denoise(raw, cfg.wiener_window, nv);
    StageRecord rec{"wiener_denoise",
                    {{"window", std::to_string(cfg.wiener_window)},
                     {"noise", std::string(to_string(cfg.noise))}}};
    if (nv) rec.params["noise_var"] = num(*nv);
    prov.push_back(std::move(rec));
  }

  Image rgb = cfg.demosaic == DemosaicMethod::Malvar ? demosaic_malvar(raw) : demosaic_bilinear(raw);
  prov.push_back({"demosaic", {{"method", std::string(to_string(cfg.demosaic))}}});

  double scale = 1.0;
  if (cfg.exposure == ExposureMode::Oracle) {
    scale = 1.0 / input.meta.exposure_gain;
  } else {
    double luma = 0;
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (float v : rgb.plane(c)) s += v;
      luma += kLumaWeights[static_cast<std::size_t>(c)] * s / static_cast<double>(rgb.pixel_count());
    }
    scale = luma > 0 ? cfg.target_luminance / luma : 1.0;
  }
  rgb = apply_gains(rgb, {scale, scale, scale});
  prov.push_back({"exposure",
                  {{"mode", cfg.exposure == ExposureMode::Oracle ? "oracle" : "auto"},
                   {"scale", num(scale)}}});

  Illuminant device_illum = Illuminant::neutral();
  switch (cfg.illuminant) {
    case IlluminantMethod::Oracle:
      device_illum = scene_to_device_illuminant(input.meta.illuminant, device_matrix);
      break;
    case IlluminantMethod::GrayWorld:
      device_illum = estimate_illuminant_minkowski(rgb, 1.0);
      break;
    case IlluminantMethod::ShadesOfGray:
    case IlluminantMethod::Minkowski:
      device_illum = estimate_illuminant_minkowski(rgb, cfg.minkowski_p);
      break;
    case IlluminantMethod::WhitePatch:
      device_illum = estimate_illuminant_minkowski(rgb, kInfinityNorm);
      break;
    case IlluminantMethod::GrayEdge:
      device_illum = estimate_illuminant_gray_edge(rgb, cfg.gray_edge_p, cfg.gray_edge_sigma);
      break;
  }
  rgb = white_balance(rgb, device_illum);
  {
    StageRecord rec{"white_balance", {{"method", std::string(to_string(cfg.illuminant))}}};
    if (cfg.illuminant == IlluminantMethod::ShadesOfGray || cfg.illuminant == IlluminantMethod::Minkowski) {
      rec.params["p"] = num(cfg.minkowski_p);
    }
    if (cfg.illuminant == IlluminantMethod::GrayEdge) {
      rec.params["p"] = num(cfg.gray_edge_p);
      rec.params["sigma"] = num(cfg.gray_edge_sigma);
    }
    const auto& e = device_illum.rgb();
    rec.params["illuminant"] = num(e[0]) + "," + num(e[1]) + "," + num(e[2]);
    prov.push_back(std::move(rec));
  }

  rgb = apply_color_matrix(rgb, inverse(device_matrix), ColorState::LinearSRGB);
  prov.push_back({"color_matrix", {{"direction", "device->srgb"}}});

  Image out = srgb_gamma(rgb);
  prov.push_back({"gamma", {{"transfer", "srgb"}}});

  return {std::move(out), device_illum, device_to_scene_illuminant(device_illum, device_matrix),
          std::move(prov)};
}

}  // namespace dcam
