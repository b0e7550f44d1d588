#include "dcam/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "dcam/error.hpp"
#include "dcam/image_io.hpp"
#include "dcam/raw_io.hpp"
#include "json.hpp"

namespace dcam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_dims(const Image& a, const Image& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

Vec3 channel_means(const Image& img) {
  Vec3 m{};
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (float v : img.plane(c)) s += v;
    m[static_cast<std::size_t>(c)] = s / static_cast<double>(img.pixel_count());
  }
  return m;
}

Illuminant ratio_illuminant(const Vec3& in, const Vec3& out) {
  Vec3 rho{};
  for (std::size_t c = 0; c < 3; ++c) {
    if (!(out[c] > 0.0) || !(in[c] > 0.0)) {
      throw DegenerateInputError("implied illuminant: channel " + std::to_string(c) + " has zero mean");
    }
    rho[c] = in[c] / out[c];
  }
  return Illuminant(rho);
}

Vec3 linear_means(const Image& output) {
  return channel_means(output.state() == ColorState::GammaSRGB ? srgb_degamma(output) : output);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ? ch : '_');
  return out;
}

}  // namespace

double angular_error(const Illuminant& est, const Illuminant& gt) {
  double dot = 0.0;
  for (int c = 0; c < 3; ++c) dot += est[c] * gt[c];
  return std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double psnr(const Image& pred, const Image& ref) {
  require_same_dims(pred, ref, "psnr");
  double se = 0.0;
  const auto a = pred.data(), b = ref.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  if (se == 0.0) return kInf;
  return 10.0 * std::log10(static_cast<double>(a.size()) / se);
}

double snr_db(const Image& pred, const Image& ref) {
  require_same_dims(pred, ref, "snr");
  double signal = 0.0, err = 0.0;
  const auto a = pred.data(), b = ref.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    signal += static_cast<double>(b[i]) * b[i];
    err += d * d;
  }
  if (signal == 0.0) throw DegenerateInputError("snr: reference is all zero");
  if (err == 0.0) return kInf;
  return 10.0 * std::log10(signal / err);
}

double mean_snr(const std::vector<double>& per_image_db) {
  if (per_image_db.empty()) throw InvalidArgumentError("mean_snr: empty set");
  return mean_of(per_image_db);
}

Illuminant implied_illuminant(const Image& raw_linear, const Image& output) {
  require_same_dims(raw_linear, output, "implied_illuminant");
  return ratio_illuminant(channel_means(raw_linear), linear_means(output));
}

Illuminant implied_illuminant(const RawFrame& raw, const Image& output, const Matrix3& device_matrix) {
  if (raw.width() != output.width() || raw.height() != output.height()) {
    throw ShapeError("implied_illuminant: raw and output sizes differ");
  }
  Vec3 device{};
  if (raw.cfa().name() == CfaPattern::bayer_rggb().name()) {
    device = channel_means(demosaic_bilinear(raw));
  } else {
    std::array<double, 3> count{};
    for (int y = 0; y < raw.height(); ++y) {
      for (int x = 0; x < raw.width(); ++x) {
        const auto c = static_cast<std::size_t>(raw.channel_at(y, x));
        device[c] += raw.at(y, x);
        count[c] += 1.0;
      }
    }
    for (std::size_t c = 0; c < 3; ++c) device[c] /= count[c];
  }
  return ratio_illuminant(multiply(inverse(device_matrix), device), linear_means(output));
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

PipelineConfig baseline_pipeline() {
  PipelineConfig cfg;
  cfg.demosaic = DemosaicMethod::Bilinear;
  cfg.noise = NoiseMode::Estimate;
  cfg.illuminant = IlluminantMethod::GrayWorld;
  cfg.exposure = ExposureMode::Oracle;
  return cfg;
}

namespace {

std::string oracle_flags_of(const PipelineConfig& cfg) {
  std::vector<std::string> f;
  if (cfg.exposure == ExposureMode::Oracle) f.push_back("exposure");
  if (cfg.illuminant == IlluminantMethod::Oracle) f.push_back("illuminant");
  if (cfg.noise == NoiseMode::Oracle) f.push_back("noise");
  if (!cfg.device_matrix) f.push_back("device_matrix");
  std::string out;
  for (const auto& s : f) out += (out.empty() ? "" : "+") + s;
  return out.empty() ? "none" : out;
}

}  // namespace

EvalMethod parse_method(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
    throw InvalidArgumentError("method '" + spec + "' is not of the form kind:value");
  }
  const std::string kind = spec.substr(0, colon), value = spec.substr(colon + 1);
  EvalMethod m;
  m.label = spec;
  m.path = value;
  if (kind == "classical") {
    m.kind = MethodKind::Classical;
    if (value == "baseline") {
      m.pipeline = baseline_pipeline();
    } else if (value == "oracle") {
      m.pipeline = PipelineConfig::oracle();
    } else {
      m.pipeline = PipelineConfig::from_config(KeyValueConfig::load(value));
    }
    m.oracle_flags = oracle_flags_of(m.pipeline);
  } else if (kind == "cnn") {
    m.kind = MethodKind::Cnn;
    if (!std::filesystem::exists(m.path)) throw InvalidArgumentError("checkpoint not found: " + value);
    m.oracle_flags = "none";
  } else if (kind == "images") {
    m.kind = MethodKind::Images;
    if (!std::filesystem::is_directory(m.path)) throw InvalidArgumentError("image directory not found: " + value);
    m.oracle_flags = "none";
  } else {
    throw InvalidArgumentError("unknown method kind '" + kind + "' (classical, cnn, images)");
  }
  return m;
}

std::vector<EvalMethod> parse_methods(const std::string& comma_list) {
  std::vector<EvalMethod> out;
  std::stringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw InvalidArgumentError("no methods given");
  return out;
}

std::string method_dir_name(std::size_t index, const std::string& label) {
  return std::to_string(index) + "_" + sanitize(label);
}

std::vector<MethodSummary> summarize(const std::vector<FrameRow>& rows, const std::vector<EvalMethod>& methods) {
  std::vector<MethodSummary> out;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const auto& m = methods[mi];
    MethodSummary s;
    s.label = m.label;
    s.oracle_flags = m.oracle_flags;
    std::vector<double> ang, ps, sn;
    for (const auto& r : rows) {
      if (r.method_index != mi) continue;
      ++s.frames;
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      ang.push_back(r.angular_error);
      ps.push_back(r.psnr);
      sn.push_back(r.snr);
    }
    s.mean_angular = mean_of(ang);
    s.median_angular = median_of(ang);
    s.psnr = mean_of(ps);
    s.mean_snr = mean_of(sn);
    out.push_back(s);
  }
  return out;
}

EvalReport evaluate_set(const std::vector<ManifestEntry>& frames, const std::vector<EvalMethod>& methods,
                        const EvalOptions& options) {
  if (frames.empty()) throw InvalidArgumentError("evaluate_set: no frames");
  if (methods.empty()) throw InvalidArgumentError("evaluate_set: no methods");
  if (options.save_images) {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      std::filesystem::create_directories(*options.save_images / method_dir_name(i, methods[i].label));
    }
  }

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(frames.size())));
  // One network copy per worker: forward passes mutate BN mode flags.
  std::vector<std::vector<std::optional<Checkpoint>>> nets(static_cast<std::size_t>(jobs));
  for (auto& per_worker : nets) {
    per_worker.resize(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (methods[i].kind == MethodKind::Cnn) per_worker[i] = load_checkpoint(methods[i].path);
    }
  }

  std::vector<FrameRow> rows(frames.size() * methods.size());
  auto run_frame = [&](std::size_t f, int worker) {
    const auto& entry = frames[f];
    const std::string name = entry.raw_path.stem().string();
    std::optional<RawFrame> raw;
    std::optional<Image> gt;
    std::string load_error;
    try {
      raw = read_raw(entry.raw_path);
      gt = read_ppm(entry.gt_path, ColorState::GammaSRGB);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
      const auto& m = methods[i];
      FrameRow& row = rows[f * methods.size() + i];
      row.method_index = i;
      row.method = m.label;
      row.frame = name;
      if (!load_error.empty()) {
        row.error = load_error;
        continue;
      }
      try {
        Image out;
        Illuminant est = Illuminant::neutral();
        switch (m.kind) {
          case MethodKind::Classical: {
            auto res = run_classical_pipeline(*raw, m.pipeline);
            out = std::move(res.image);
            est = res.scene_illuminant;
            break;
          }
          case MethodKind::Cnn:
            out = infer(nets[static_cast<std::size_t>(worker)][i]->net, *raw);
            est = implied_illuminant(*raw, out, raw->meta.device_matrix);
            break;
          case MethodKind::Images:
            out = read_pfm(m.path / (name + ".pfm"), ColorState::GammaSRGB);
            est = implied_illuminant(*raw, out, raw->meta.device_matrix);
            break;
        }
        row.psnr = psnr(out, *gt);
        row.snr = snr_db(out, *gt);
        row.angular_error = angular_error(est, raw->meta.illuminant);
        row.ok = true;
        if (options.save_images) {
          const auto dir = *options.save_images / method_dir_name(i, m.label);
          write_pfm(dir / (name + ".pfm"), out);
          write_ppm8(dir / (name + ".ppm"), out);
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };

  if (jobs == 1) {
    for (std::size_t f = 0; f < frames.size(); ++f) run_frame(f, 0);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t f = next++; f < frames.size(); f = next++) run_frame(f, w);
      });
    }
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.rows = std::move(rows);
  report.methods = summarize(report.rows, methods);
  return report;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "method,frame,status,psnr,snr,angular_error,error\n";
  for (const auto& r : report.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out << '"' << r.method << "\"," << r.frame << ',' << (r.ok ? "ok" : "failed") << ','
        << (r.ok ? format_metric(r.psnr) : "") << ',' << (r.ok ? format_metric(r.snr) : "") << ','
        << (r.ok ? format_metric(r.angular_error) : "") << ",\"" << err << "\"\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(format_metric(v)); };
  ordered_json j = ordered_json::object();
  for (const auto& s : report.methods) {
    j[s.label] = {{"mean_ang", num(s.mean_angular)}, {"median_ang", num(s.median_angular)},
                  {"psnr", num(s.psnr)},             {"mean_snr", num(s.mean_snr)},
                  {"failures", s.failures},          {"frames", s.frames},
                  {"oracle", s.oracle_flags}};
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dcam
