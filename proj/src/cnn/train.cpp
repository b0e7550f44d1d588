#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "dcam/cnn.hpp"
#include "dcam/error.hpp"
#include "dcam/image_io.hpp"
#include "dcam/raw_io.hpp"
#include "dcam/rng.hpp"

namespace dcam {

std::vector<TrainingPair> load_pairs(const Manifest& manifest, Split split) {
  std::vector<TrainingPair> pairs;
  for (const auto& e : manifest.split(split)) {
    const RawFrame raw = read_raw(e.raw_path);
    const Image gt = read_ppm(e.gt_path, ColorState::GammaSRGB);
    if (gt.width() != raw.width() || gt.height() != raw.height()) {
      throw ShapeError("ground truth " + e.gt_path.string() + " does not match raw size");
    }
    TrainingPair p;
    p.name = e.raw_path.stem().string();
    p.width = raw.width();
    p.height = raw.height();
    p.input.assign(raw.mosaic().begin(), raw.mosaic().end());
    p.target.assign(gt.data().begin(), gt.data().end());
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

nn::Tensor<float> stack(const std::vector<TrainingPair>& pairs, const std::vector<std::size_t>& indices,
                        bool targets) {
  if (indices.empty()) throw InvalidArgumentError("cannot stack an empty batch");
  const auto& first = pairs.at(indices.front());
  const int channels = targets ? 3 : 1;
  std::vector<float> data;
  data.reserve(indices.size() * static_cast<std::size_t>(channels) * first.width * first.height);
  for (std::size_t i : indices) {
    const auto& p = pairs.at(i);
    if (p.width != first.width || p.height != first.height) {
      throw ShapeError("batch mixes frame sizes: " + p.name + " vs " + first.name);
    }
    const auto& src = targets ? p.target : p.input;
    data.insert(data.end(), src.begin(), src.end());
  }
  return nn::Tensor<float>(nn::Shape{static_cast<int>(indices.size()), channels, first.height, first.width},
                           std::move(data));
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

nn::Tensor<float> stack_inputs(const std::vector<TrainingPair>& pairs, const std::vector<std::size_t>& indices) {
  return stack(pairs, indices, false);
}

nn::Tensor<float> stack_targets(const std::vector<TrainingPair>& pairs, const std::vector<std::size_t>& indices) {
  return stack(pairs, indices, true);
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,lr\n" << std::setprecision(9);
  for (const auto& r : rows) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Trainer::Trainer(DeepCameraNet<float>& net, const TrainConfig& cfg, TrainState state)
    : net_(net), cfg_(cfg), state_(std::move(state)) {
  cfg_.validate();
  if (state_.epoch == 0 && state_.adam.step == 0) state_.lr = cfg_.lr0;
}

double Trainer::step(const nn::Tensor<float>& input, const nn::Tensor<float>& target) {
  const auto params = net_.parameters();
  for (auto p : params) p.zero_grad();
  auto loss = composite_loss(net_.forward(input, nn::Mode::Train), target, net_.config());
  const double value = loss.item();
  if (!finite(value)) return value;
  loss.backward();
  nn::adam_step(params, state_.adam, state_.lr);
  return value;
}

double Trainer::evaluate(const std::vector<TrainingPair>& pairs) const {
  if (pairs.empty()) throw InvalidArgumentError("evaluate: empty set");
  nn::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg_.batch)) {
    std::vector<std::size_t> idx(std::min(pairs.size() - start, static_cast<std::size_t>(cfg_.batch)));
    std::iota(idx.begin(), idx.end(), start);
    auto pred = net_.forward(stack_inputs(pairs, idx), nn::Mode::Eval);
    total += composite_loss(pred, stack_targets(pairs, idx), net_.config()).item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(pairs.size());
}

TrainResult train(DeepCameraNet<float>& net, const std::vector<TrainingPair>& train_set,
                  const std::vector<TrainingPair>& val_set, const TrainConfig& cfg, const TrainOutputs& outputs,
                  const TrainHooks& hooks) {
  if (train_set.empty()) throw InvalidArgumentError("train: training split is empty");
  if (val_set.empty()) throw InvalidArgumentError("train: validation split is empty");
  Trainer trainer(net, cfg);
  nn::PlateauSchedule schedule(cfg.lr0, cfg.lr_min, cfg.plateau_patience, cfg.plateau_factor);
  TrainResult result;

  auto abort = [&](const std::string& what, double value) {
    std::string msg = what + " is not finite (" + std::to_string(value) + ") at epoch " +
                      std::to_string(trainer.state().epoch + 1) + ", step " + std::to_string(trainer.steps());
    if (outputs.diagnostic) {
      save_checkpoint(*outputs.diagnostic, net, &trainer.state());
      msg += "; diagnostic checkpoint: " + outputs.diagnostic->string();
    }
    if (outputs.history_csv) write_history_csv(*outputs.history_csv, result.history);
    throw NumericError(msg);
  };

  std::vector<std::size_t> order(train_set.size());
  const auto batch = static_cast<std::size_t>(cfg.batch);
  for (int epoch = 1; epoch <= cfg.max_epochs && !result.stopped_early; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "epoch:" + std::to_string(epoch)));
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      const double loss = trainer.step(stack_inputs(train_set, idx), stack_targets(train_set, idx));
      if (!finite(loss)) abort("training loss", loss);
      loss_sum += loss * static_cast<double>(idx.size());
      seen += idx.size();
      result.last_batch_loss = loss;
      if ((cfg.max_steps && trainer.steps() >= *cfg.max_steps) ||
          (cfg.stop_below_loss && loss < *cfg.stop_below_loss)) {
        result.stopped_early = true;
        break;
      }
    }
    double val = trainer.evaluate(val_set);
    if (hooks.val_loss_override) val = hooks.val_loss_override(epoch, val);
    if (!finite(val)) abort("validation loss", val);

    auto& st = trainer.state();
    st.epoch = epoch;
    st.lr = schedule.step(val);
    st.schedule_best = schedule.best();
    st.bad_epochs = schedule.epochs_since_improvement();
    const HistoryRow row{epoch, seen ? loss_sum / static_cast<double>(seen) : 0.0, val, st.lr};
    result.history.push_back(row);
    if (val < st.best_val) {
      st.best_val = val;
      if (outputs.checkpoint) save_checkpoint(*outputs.checkpoint, net, &st);
    }
    if (outputs.history_csv) write_history_csv(*outputs.history_csv, result.history);
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  result.state = trainer.state();
  result.steps = trainer.steps();
  return result;
}

Image infer(DeepCameraNet<float>& net, const RawFrame& raw) {
  if (raw.width() % 4 != 0 || raw.height() % 4 != 0) {
    throw ShapeError("infer: raw size " + std::to_string(raw.width()) + "x" + std::to_string(raw.height()) +
                     " is not a multiple of 4");
  }
  nn::NoGradGuard no_grad;
  nn::Tensor<float> x(nn::Shape{1, 1, raw.height(), raw.width()},
                      std::vector<float>(raw.mosaic().begin(), raw.mosaic().end()));
  auto y = net.forward(x, nn::Mode::Eval);
  std::vector<float> data(y.data().begin(), y.data().end());
  const float lo = std::nextafter(0.0f, 1.0f), hi = std::nextafter(1.0f, 0.0f);
  for (float& v : data) v = std::isnan(v) ? lo : std::clamp(v, lo, hi);
  return Image(raw.width(), raw.height(), ColorState::GammaSRGB, std::move(data));
}

}  // namespace dcam
