// dcam: command-line front end for dataset simulation, classical and CNN
// processing, training and evaluation.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "dcam/classical_isp.hpp"
#include "dcam/cnn.hpp"
#include "dcam/dataset.hpp"
#include "dcam/error.hpp"
#include "dcam/eval.hpp"
#include "dcam/image_io.hpp"
#include "dcam/raw_io.hpp"
#include "dcam/rng.hpp"
#include "dcam/scenes.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// Input problems surfaced as usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number '") + item + "' in --" + what);
    }
  }
  if (out.empty()) throw UsageError(std::string("--") + what + " is empty");
  return out;
}

std::pair<int, int> parse_size(const std::string& text) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream is(text);
  if (!(is >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0 || !is.eof()) {
    throw UsageError("size must look like 64x64, got '" + text + "'");
  }
  return {w, h};
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DCAM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("DCAM_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

dcam::Split parse_split(const std::string& s) {
  try {
    return dcam::split_from_string(s);
  } catch (const dcam::Error& e) {
    throw UsageError(e.what());
  }
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

// ---------------------------------------------------------------- scenes

struct ScenesArgs {
  fs::path out;
  int count = 20;
  std::string size = "256x256";
  std::string kind = "textured";
  std::optional<std::uint64_t> seed;
};

int cmd_scenes(const ScenesArgs& a) {
  const auto [w, h] = parse_size(a.size);
  dcam::SceneKind kind;
  if (a.kind == "smooth") {
    kind = dcam::SceneKind::Smooth;
  } else if (a.kind == "textured") {
    kind = dcam::SceneKind::Textured;
  } else {
    throw UsageError("--kind must be smooth or textured");
  }
  const auto files = dcam::write_scene_corpus(a.out, a.count, w, h, a.seed.value_or(default_seed()), kind);
  std::cout << files.size() << " scenes written to " << a.out.string() << '\n';
  return kExitOk;
}

// -------------------------------------------------------------- simulate

struct SimulateArgs {
  fs::path src;
  fs::path out;
  std::string snr = "25,30";
  std::string exposures = "0.5,1,2";
  int crops = 4;
  std::string crop_size = "240x220";
  std::string cfa = "bayer";
  std::string split = "15,1,1";
  std::optional<std::uint64_t> seed;
  double defect_fraction = 1e-4;
  double illuminant_spread = 0.3;
  bool no_fpn = false;
  bool fpn_before_exposure = false;
  int jobs = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  if (!fs::is_directory(a.src)) throw UsageError("--src is not a directory: " + a.src.string());
  dcam::DatasetConfig cfg;
  cfg.snr_levels_db = parse_list(a.snr, "snr");
  cfg.exposures = parse_list(a.exposures, "exposures");
  cfg.crops = a.crops;
  std::tie(cfg.crop_width, cfg.crop_height) = parse_size(a.crop_size);
  try {
    cfg.cfa = dcam::CfaPattern::from_name(a.cfa);
  } catch (const dcam::Error& e) {
    throw UsageError(e.what());
  }
  const auto ratios = parse_list(a.split, "split");
  if (ratios.size() != 3) throw UsageError("--split needs three ratios train,val,test");
  cfg.split_ratios = {ratios[0], ratios[1], ratios[2]};
  cfg.seed = a.seed.value_or(default_seed());
  cfg.defect_fraction = a.defect_fraction;
  cfg.illuminant_spread = a.illuminant_spread;
  if (a.no_fpn) cfg.fpn.reset();
  cfg.fpn_before_exposure = a.fpn_before_exposure;
  cfg.jobs = a.jobs;

  const auto result = dcam::build_dataset(a.src, a.out, cfg);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (result.manifest.entries.empty()) {
    std::cerr << "error: no frames produced\n";
    return kExitPartial;
  }
  const auto counts = [&] {
    std::array<std::size_t, 3> c{};
    for (const auto& e : result.manifest.entries) ++c[static_cast<std::size_t>(e.split)];
    return c;
  }();
  std::cout << result.manifest.entries.size() << " frames (train " << counts[0] << ", val " << counts[1]
            << ", test " << counts[2] << ")\nmanifest: " << result.manifest_path.string() << '\n';
  return result.warnings.empty() ? kExitOk : kExitPartial;
}

// -------------------------------------------------------------- pipeline

struct PipelineArgs {
  fs::path manifest;
  std::string split = "test";
  std::optional<fs::path> config;
  std::optional<std::string> demosaic, wb, exposure, noise;
  std::optional<double> p;
  bool no_defects = false;
  fs::path out;
};

int cmd_pipeline(const PipelineArgs& a) {
  dcam::KeyValueConfig kv = a.config ? dcam::KeyValueConfig::load(*a.config) : dcam::KeyValueConfig{};
  if (a.demosaic) kv.set("demosaic", quoted(*a.demosaic));
  if (a.wb) kv.set("wb", quoted(*a.wb));
  if (a.exposure) kv.set("exposure", quoted(*a.exposure));
  if (a.noise) kv.set("noise", quoted(*a.noise));
  if (a.p) kv.set("p", std::to_string(*a.p));
  if (a.no_defects) kv.set("correct_defects", "false");
  dcam::PipelineConfig cfg;
  try {
    cfg = dcam::PipelineConfig::from_config(kv);
  } catch (const dcam::InvalidArgumentError& e) {
    throw UsageError(e.what());
  }
  const auto frames = dcam::load_manifest(a.manifest).split(parse_split(a.split));
  if (frames.empty()) throw UsageError("split '" + a.split + "' has no frames");
  fs::create_directories(a.out);

  std::size_t failed = 0;
  for (const auto& f : frames) {
    const std::string name = f.raw_path.stem().string();
    try {
      const auto raw = dcam::read_raw(f.raw_path);
      const auto res = dcam::run_classical_pipeline(raw, cfg);
      dcam::write_ppm8(a.out / (name + ".ppm"), res.image);
      nlohmann::ordered_json prov;
      prov["frame"] = name;
      prov["raw"] = f.raw_path.string();
      prov["device_illuminant"] = res.device_illuminant.rgb();
      prov["scene_illuminant"] = res.scene_illuminant.rgb();
      for (const auto& s : res.provenance) prov["stages"].push_back({{"name", s.name}, {"params", s.params}});
      std::ofstream(a.out / (name + ".json")) << prov.dump(2) << '\n';
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "frame " << name << " failed: " << e.what() << '\n';
    }
  }
  std::cout << frames.size() - failed << "/" << frames.size() << " frames written to " << a.out.string() << '\n';
  return failed ? kExitPartial : kExitOk;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
  fs::path manifest;
  int width = 16;
  int epochs = 50;
  int batch = 32;
  double lr = 1e-3;
  double lr_min = 1e-6;
  int patience = 100;
  double alpha = 0.9;
  bool dog_on_prediction = false;
  std::optional<std::int64_t> max_steps;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> history;
  fs::path out;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  const auto manifest = dcam::load_manifest(a.manifest);
  const auto train_set = dcam::load_pairs(manifest, dcam::Split::Train);
  const auto val_set = dcam::load_pairs(manifest, dcam::Split::Val);
  if (train_set.empty() || val_set.empty()) throw UsageError("manifest needs non-empty train and val splits");

  dcam::NetConfig net_cfg;
  net_cfg.base_width = a.width;
  net_cfg.alpha_loss = a.alpha;
  net_cfg.dog_on_prediction = a.dog_on_prediction;
  dcam::TrainConfig cfg;
  cfg.lr0 = a.lr;
  cfg.lr_min = a.lr_min;
  cfg.batch = a.batch;
  cfg.plateau_patience = a.patience;
  cfg.max_epochs = a.epochs;
  cfg.seed = a.seed.value_or(default_seed());
  cfg.max_steps = a.max_steps;
  try {
    net_cfg.validate();
    cfg.validate();
  } catch (const dcam::InvalidArgumentError& e) {
    throw UsageError(e.what());
  }

  dcam::DeepCameraNet<float> net(net_cfg, dcam::derive_seed(cfg.seed, "init"));
  dcam::TrainOutputs outputs;
  outputs.checkpoint = a.out;
  outputs.history_csv = a.history.value_or(fs::path(a.out.string() + ".history.csv"));
  outputs.diagnostic = fs::path(a.out.string() + ".diag");
  dcam::TrainHooks hooks;
  if (!a.quiet) {
    hooks.on_epoch = [](const dcam::HistoryRow& r) {
      std::cout << "epoch " << r.epoch << "  train " << r.train_loss << "  val " << r.val_loss << "  lr " << r.lr
                << std::endl;
    };
  }
  std::cout << "training " << net.param_count() << " parameters on " << train_set.size() << " pairs ("
            << val_set.size() << " validation)\n";
  const auto result = dcam::train(net, train_set, val_set, cfg, outputs, hooks);
  std::cout << "best validation loss " << result.state.best_val << " after " << result.steps << " steps\n"
            << "checkpoint: " << a.out.string() << "\nhistory: " << outputs.history_csv->string() << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- infer

struct InferArgs {
  fs::path checkpoint;
  std::optional<fs::path> manifest;
  std::string split = "test";
  std::vector<fs::path> raws;
  fs::path out;
};

int cmd_infer(const InferArgs& a) {
  std::vector<fs::path> inputs = a.raws;
  if (a.manifest) {
    for (const auto& e : dcam::load_manifest(*a.manifest).split(parse_split(a.split))) inputs.push_back(e.raw_path);
  }
  if (inputs.empty()) throw UsageError("nothing to process: give --manifest or --raw");
  auto ck = dcam::load_checkpoint(a.checkpoint);
  fs::create_directories(a.out);
  std::size_t failed = 0;
  for (const auto& path : inputs) {
    const std::string name = path.stem().string();
    try {
      const auto img = dcam::infer(ck.net, dcam::read_raw(path));
      dcam::write_pfm(a.out / (name + ".pfm"), img);
      dcam::write_ppm8(a.out / (name + ".ppm"), img);
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "frame " << name << " failed: " << e.what() << '\n';
    }
  }
  std::cout << inputs.size() - failed << "/" << inputs.size() << " frames written to " << a.out.string() << '\n';
  return failed ? kExitPartial : kExitOk;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  fs::path manifest;
  std::string split = "test";
  std::string methods;
  fs::path out;
  bool save_images = false;
  int jobs = 1;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<dcam::EvalMethod> methods;
  try {
    methods = dcam::parse_methods(a.methods);
  } catch (const dcam::InvalidArgumentError& e) {
    throw UsageError(e.what());
  }
  const auto frames = dcam::load_manifest(a.manifest).split(parse_split(a.split));
  if (frames.empty()) throw UsageError("split '" + a.split + "' has no frames");
  fs::create_directories(a.out);
  dcam::EvalOptions opts;
  opts.jobs = a.jobs;
  if (a.save_images) opts.save_images = a.out / "images";
  const auto report = dcam::evaluate_set(frames, methods, opts);
  dcam::write_report_csv(a.out / "frames.csv", report);
  dcam::write_report_json(a.out / "summary.json", report);

  std::size_t failures = 0;
  std::cout << "method  frames  failures  mean_ang  median_ang  psnr  mean_snr\n";
  for (const auto& s : report.methods) {
    failures += s.failures;
    std::cout << s.label << "  " << s.frames << "  " << s.failures << "  " << dcam::format_metric(s.mean_angular)
              << "  " << dcam::format_metric(s.median_angular) << "  " << dcam::format_metric(s.psnr) << "  "
              << dcam::format_metric(s.mean_snr) << '\n';
  }
  std::cout << "report: " << (a.out / "frames.csv").string() << ", " << (a.out / "summary.json").string() << '\n';
  return failures ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  fs::path eval_dir;
  fs::path manifest;
  std::string split = "test";
  fs::path out;
  int limit = 0;
};

// Horizontal strip of equally sized images separated by white gaps.
dcam::Image make_strip(const std::vector<dcam::Image>& panels) {
  constexpr int kGap = 4;
  const int w = panels.front().width(), h = panels.front().height();
  const int n = static_cast<int>(panels.size());
  dcam::Image strip(n * w + (n - 1) * kGap, h, dcam::ColorState::GammaSRGB, 1.0f);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) strip.at(c, y, i * (w + kGap) + x) = panels[static_cast<std::size_t>(i)].at(c, y, x);
      }
    }
  }
  return strip;
}

int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.eval_dir / "summary.json");
  if (!in) throw UsageError("no summary.json in " + a.eval_dir.string());
  const auto summary = nlohmann::ordered_json::parse(in);
  std::vector<fs::path> dirs;
  std::size_t idx = 0;
  for (auto it = summary.begin(); it != summary.end(); ++it, ++idx) {
    dirs.push_back(a.eval_dir / "images" / dcam::method_dir_name(idx, it.key()));
  }
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw UsageError("missing " + d.string() + " (run eval with --save-images)");
  }
  auto frames = dcam::load_manifest(a.manifest).split(parse_split(a.split));
  if (a.limit > 0 && frames.size() > static_cast<std::size_t>(a.limit)) frames.resize(static_cast<std::size_t>(a.limit));
  fs::create_directories(a.out);
  std::size_t written = 0, failed = 0;
  for (const auto& f : frames) {
    const std::string name = f.raw_path.stem().string();
    try {
      const auto raw = dcam::read_raw(f.raw_path);
      dcam::Image mosaic(raw.width(), raw.height(), dcam::ColorState::GammaSRGB);
      for (int y = 0; y < raw.height(); ++y) {
        for (int x = 0; x < raw.width(); ++x) {
          // Each site shown in its own filter colour.
          mosaic.at(raw.channel_at(y, x), y, x) = static_cast<float>(dcam::linear_to_srgb(raw.at(y, x)));
        }
      }
      std::vector<dcam::Image> panels{mosaic, dcam::read_ppm(f.gt_path)};
      for (const auto& d : dirs) panels.push_back(dcam::read_ppm(d / (name + ".ppm")));
      dcam::write_ppm8(a.out / (name + "_strip.ppm"), make_strip(panels));
      ++written;
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "frame " << name << " failed: " << e.what() << '\n';
    }
  }
  std::cout << written << " strips (raw | ground truth | methods in summary order) written to " << a.out.string()
            << '\n';
  return failed ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  dcam::nn::tune_allocator_for_training();
  CLI::App app{"Raw-to-RGB camera pipelines: simulation, classical ISP, CNN training and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  ScenesArgs scenes;
  auto* sc = app.add_subcommand("scenes", "Generate a synthetic scene corpus (gamma sRGB PPMs)");
  sc->add_option("--out", scenes.out, "Output directory")->required();
  sc->add_option("--count", scenes.count, "Number of scenes")->check(CLI::PositiveNumber);
  sc->add_option("--size", scenes.size, "Scene size WxH");
  sc->add_option("--kind", scenes.kind, "smooth or textured");
  sc->add_option("--seed", scenes.seed, "Seed (default: DCAM_SEED or 0)");

  SimulateArgs sim;
  auto* ss = app.add_subcommand("simulate", "Simulate raw/ground-truth pairs from source scenes");
  ss->add_option("--src", sim.src, "Directory of source PPMs")->required();
  ss->add_option("--out", sim.out, "Output directory")->required();
  ss->add_option("--snr", sim.snr, "Shot-noise SNR levels in dB (inf for noise-free)");
  ss->add_option("--exposures", sim.exposures, "Exposure gains");
  ss->add_option("--crops", sim.crops, "Crops per scene")->check(CLI::PositiveNumber);
  ss->add_option("--crop-size", sim.crop_size, "Crop size WxH");
  ss->add_option("--cfa", sim.cfa, "bayer or xtrans");
  ss->add_option("--split", sim.split, "Train,val,test ratios");
  ss->add_option("--seed", sim.seed, "Seed (default: DCAM_SEED or 0)");
  ss->add_option("--defect-fraction", sim.defect_fraction, "Fraction of defective sites");
  ss->add_option("--illuminant-spread", sim.illuminant_spread, "Illuminant R/B gain spread around 1");
  ss->add_flag("--no-fpn", sim.no_fpn, "Disable fixed-pattern noise");
  ss->add_flag("--fpn-before-exposure", sim.fpn_before_exposure, "Apply FPN before the exposure gain");
  ss->add_option("--jobs", sim.jobs, "Worker threads")->check(CLI::PositiveNumber);

  PipelineArgs pipe;
  auto* sp = app.add_subcommand("pipeline", "Run the classical ISP on a manifest split");
  sp->add_option("--manifest", pipe.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  sp->add_option("--split", pipe.split, "train, val or test");
  sp->add_option("--config", pipe.config, "Pipeline config file")->check(CLI::ExistingFile);
  sp->add_option("--demosaic", pipe.demosaic, "bilinear or malvar");
  sp->add_option("--wb", pipe.wb, "grayworld, shades-of-gray, white-patch, minkowski, gray-edge or oracle");
  sp->add_option("--exposure", pipe.exposure, "auto or oracle");
  sp->add_option("--noise", pipe.noise, "estimate, oracle or off");
  sp->add_option("--p", pipe.p, "Minkowski p");
  sp->add_flag("--no-defects", pipe.no_defects, "Skip defect correction");
  sp->add_option("--out", pipe.out, "Output directory")->required();

  TrainArgs tr;
  auto* st = app.add_subcommand("train", "Train the network on a manifest");
  st->add_option("--manifest", tr.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  st->add_option("--width", tr.width, "Base channel width")->check(CLI::PositiveNumber);
  st->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  st->add_option("--batch", tr.batch, "Batch size")->check(CLI::PositiveNumber);
  st->add_option("--lr", tr.lr, "Initial learning rate");
  st->add_option("--lr-min", tr.lr_min, "Learning rate floor");
  st->add_option("--patience", tr.patience, "Plateau patience in epochs");
  st->add_option("--alpha", tr.alpha, "Weight of the squared-error term");
  st->add_flag("--dog-on-prediction", tr.dog_on_prediction, "Weight map from the prediction");
  st->add_option("--max-steps", tr.max_steps, "Stop after this many optimizer steps");
  st->add_option("--seed", tr.seed, "Seed (default: DCAM_SEED or 0)");
  st->add_option("--history", tr.history, "History CSV (default: <out>.history.csv)");
  st->add_option("--out", tr.out, "Checkpoint path (best validation loss)")->required();
  st->add_flag("--quiet", tr.quiet, "No per-epoch output");

  InferArgs inf;
  auto* si = app.add_subcommand("infer", "Run a trained network on raws");
  si->add_option("--checkpoint", inf.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  si->add_option("--manifest", inf.manifest, "Dataset manifest")->check(CLI::ExistingFile);
  si->add_option("--split", inf.split, "Split when using --manifest");
  si->add_option("--raw", inf.raws, "Raw sidecar(s)")->check(CLI::ExistingFile);
  si->add_option("--out", inf.out, "Output directory (.pfm + .ppm per frame)")->required();

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "Score methods against ground truth");
  se->add_option("--manifest", ev.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  se->add_option("--split", ev.split, "train, val or test");
  se->add_option("--methods", ev.methods, "Comma list of classical:<cfg|baseline|oracle>, cnn:<ckpt>, images:<dir>")
      ->required();
  se->add_option("--out", ev.out, "Report directory")->required();
  se->add_flag("--save-images", ev.save_images, "Keep every method's outputs for `report`");
  se->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);

  ReportArgs rep;
  auto* sr = app.add_subcommand("report", "Render side-by-side comparison strips from an eval directory");
  sr->add_option("--eval", rep.eval_dir, "Directory written by eval --save-images")->required();
  sr->add_option("--manifest", rep.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  sr->add_option("--split", rep.split, "train, val or test");
  sr->add_option("--out", rep.out, "Output directory")->required();
  sr->add_option("--limit", rep.limit, "At most this many frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sc) return cmd_scenes(scenes);
    if (*ss) return cmd_simulate(sim);
    if (*sp) return cmd_pipeline(pipe);
    if (*st) return cmd_train(tr);
    if (*si) return cmd_infer(inf);
    if (*se) return cmd_eval(ev);
    if (*sr) return cmd_report(rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help() << '\n';
    return kExitUsage;
  } catch (const dcam::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const dcam::InvalidArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitUsage;
}
