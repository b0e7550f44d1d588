#include "dcam/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "dcam/error.hpp"
#include "dcam/image_io.hpp"
#include "dcam/raw_io.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace fs = std::filesystem;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val" || name == "validation") return Split::Val;
  if (name == "test") return Split::Test;
  throw InvalidArgumentError("unknown split '" + std::string(name) + "'");
}

std::vector<ManifestEntry> Manifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [s](const ManifestEntry& e) { return e.split == s; });
  return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    arr.push_back({{"raw_path", e.raw_path.lexically_proximate(base).generic_string()},
                   {"gt_path", e.gt_path.lexically_proximate(base).generic_string()},
                   {"split", std::string(to_string(e.split))},
                   {"seed", e.seed}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << arr.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  Manifest m;
  try {
    nlohmann::json arr;
    in >> arr;
    for (const auto& j : arr) {
      ManifestEntry e;
      e.raw_path = base / j.at("raw_path").get<std::string>();
      e.gt_path = base / j.at("gt_path").get<std::string>();
      e.split = split_from_string(j.at("split").get<std::string>());
      e.seed = j.at("seed").get<std::uint64_t>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (!(sum > 0) || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw InvalidArgumentError("split ratios must be non-negative with a positive sum");
  }
  auto part = [&](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r / sum + 0.5));
  };
  std::size_t val = part(ratios[1]);
  std::size_t test = part(ratios[2]);
  if (val + test > n) test = n - std::min(n, val);
  return {n - val - test, val, test};
}

Matrix3 default_device_matrix() {
  return {{{0.80, 0.15, 0.05}, {0.10, 0.80, 0.10}, {0.05, 0.20, 0.75}}};
}

namespace {

struct SceneOutput {
  std::vector<ManifestEntry> entries;
  std::string warning;
};

std::string format_index(const char* prefix, int i) { return prefix + std::to_string(i); }

SceneOutput process_scene(const fs::path& src, const fs::path& frames_dir, const DatasetConfig& cfg,
                          const std::optional<FpnParams>& fpn) {
  SceneOutput result;
  Image scene;
  try {
    scene = read_ppm(src, ColorState::GammaSRGB);
  } catch (const Error& e) {
    result.warning = "skipping " + src.string() + ": " + e.what();
    return result;
  }
  if (scene.width() < cfg.crop_width || scene.height() < cfg.crop_height) {
    result.warning = "skipping " + src.string() + ": smaller than the crop size";
    return result;
  }
  const std::string stem = src.stem().string();

  Rng illum_rng(derive_seed(cfg.seed, "illuminant/" + stem));
  const double lo = 1.0 - cfg.illuminant_spread, hi = 1.0 + cfg.illuminant_spread;
  const double r_gain = illum_rng.uniform(lo, hi);
  const double b_gain = illum_rng.uniform(lo, hi);
  const Illuminant illum(r_gain, 1.0, b_gain);

  Rng crop_rng(derive_seed(cfg.seed, "crops/" + stem));
  const int tw = cfg.cfa.tile_w(), th = cfg.cfa.tile_h();
  const int nx = (scene.width() - cfg.crop_width) / tw + 1;
  const int ny = (scene.height() - cfg.crop_height) / th + 1;

  for (int k = 0; k < cfg.crops; ++k) {
    const int x0 = static_cast<int>(crop_rng.below(static_cast<std::uint64_t>(nx))) * tw;
    const int y0 = static_cast<int>(crop_rng.below(static_cast<std::uint64_t>(ny))) * th;
    const Image patch = crop(scene, x0, y0, cfg.crop_width, cfg.crop_height, cfg.cfa);
    const std::string crop_name = stem + "_" + format_index("k", k);
    const fs::path gt_path = frames_dir / (crop_name + "_gt.ppm");
    bool gt_written = false;

    for (std::size_t n = 0; n < cfg.snr_levels_db.size(); ++n) {
      for (std::size_t e = 0; e < cfg.exposures.size(); ++e) {
        const std::string frame_name = crop_name + "_" + format_index("n", static_cast<int>(n)) +
                                       "_" + format_index("e", static_cast<int>(e));
        const std::uint64_t frame_seed = derive_seed(cfg.seed, frame_name);
        SimMeta meta;
        meta.illuminant = illum;
        meta.device_matrix = cfg.device_matrix;
        meta.exposure_gain = cfg.exposures[e];
        meta.shot_snr_db = cfg.snr_levels_db[n];
        meta.noise_seed = frame_seed;
        meta.fpn = fpn;
        meta.fpn_before_exposure = cfg.fpn_before_exposure;
        if (cfg.defect_fraction > 0) {
          meta.defect_seed = derive_seed(frame_seed, "defects");
          meta.defect_fraction = cfg.defect_fraction;
        }
        const SimResult sim = simulate_raw(patch, meta, cfg.cfa);
        const fs::path raw_path = write_raw(frames_dir / frame_name, sim.raw);
        if (!gt_written) {
          write_ppm16(gt_path, sim.ground_truth);
          gt_written = true;
        }
        result.entries.push_back({raw_path, gt_path, Split::Train, frame_seed});
      }
    }
  }
  return result;
}

}  // namespace

DatasetResult build_dataset(const fs::path& src_dir, const fs::path& out_dir, const DatasetConfig& cfg) {
  if (cfg.snr_levels_db.empty() || cfg.exposures.empty() || cfg.crops <= 0) {
    throw InvalidArgumentError("dataset config needs SNR levels, exposures and crops > 0");
  }
  if (cfg.crop_width % cfg.cfa.tile_w() != 0 || cfg.crop_height % cfg.cfa.tile_h() != 0) {
    throw InvalidArgumentError("crop size must be a multiple of the CFA tile");
  }
  if (!fs::is_directory(src_dir)) throw IoError("source directory not found: " + src_dir.string());

  std::vector<fs::path> sources;
  for (const auto& entry : fs::directory_iterator(src_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") sources.push_back(entry.path());
  }
  std::sort(sources.begin(), sources.end());
  if (sources.empty()) throw InvalidArgumentError("no .ppm source images in " + src_dir.string());

  const fs::path frames_dir = out_dir / "frames";
  fs::create_directories(frames_dir);

  std::optional<FpnParams> fpn = cfg.fpn;
  if (fpn) fpn->seed = derive_seed(cfg.seed, "fpn");

  std::vector<SceneOutput> outputs(sources.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(sources.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        outputs[i] = process_scene(sources[i], frames_dir, cfg, fpn);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("dataset generation failed: " + e);
  }

  DatasetResult result;
  for (auto& out : outputs) {
    if (!out.warning.empty()) result.warnings.push_back(out.warning);
    for (auto& e : out.entries) result.manifest.entries.push_back(std::move(e));
  }
  if (result.manifest.entries.empty()) {
    throw InvalidArgumentError("no usable source images in " + src_dir.string());
  }

  const auto counts = split_counts(result.manifest.entries.size(), cfg.split_ratios);
  std::vector<std::size_t> order(result.manifest.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(derive_seed(cfg.seed, "split"));
  shuffle(order.begin(), order.end(), split_rng);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Split s = r < counts[0] ? Split::Train : (r < counts[0] + counts[1] ? Split::Val : Split::Test);
    result.manifest.entries[order[r]].split = s;
  }

  result.manifest_path = out_dir / "manifest.json";
  write_manifest(result.manifest_path, result.manifest);
  return result;
}

}  // namespace dcam
