#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dcam/dataset.hpp"
#include "dcam/image.hpp"
#include "dcam/nn/ops.hpp"
#include "dcam/nn/optim.hpp"
#include "dcam/raw_sim.hpp"

namespace dcam {

struct NetConfig {
  int base_width = 64;
  int input_channels = 1;
  int output_channels = 3;
  double leaky_alpha = 0.2;
  double dog_sigma1 = 1.0;
  double dog_sigma2 = 2.0;
  double alpha_loss = 0.9;
  double init_scale = 0.05;
  // Weight map from the prediction instead of the target (still detached).
  bool dog_on_prediction = false;
  double bn_momentum = 0.99;
  double bn_eps = 1e-3;

  // Throws InvalidArgumentError.
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

struct TrainConfig {
  double lr0 = 1e-3;
  double lr_min = 1e-6;
  int batch = 32;
  int plateau_patience = 100;
  double plateau_factor = 0.5;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  // Optional early stops: total optimizer steps, or a training batch loss
  // below the threshold.
  std::optional<std::int64_t> max_steps;
  std::optional<double> stop_below_loss;

  void validate() const;
};

template <class T>
struct ConvLayer {
  std::string name;
  nn::Tensor<T> weight;  // (out, in, k, k)
  nn::Tensor<T> bias;    // (out, 1, 1, 1)
};

template <class T>
struct BnLayer {
  std::string name;
  nn::BatchNormState<T> state;
};

// Structural description of one short connection, for introspection.
struct SkipPath {
  std::string name;
  std::string tap;   // main-path layer the connection starts from
  std::string join;  // main-path stage it is concatenated into
  std::vector<std::string> ops;

  bool has(const std::string& op) const;
};

// Encoder-decoder with one main path and three short connections.
//   main: c1 c2 | maxpool | c3 c4 | maxpool | c5 c6 -> [+S3] r3 d0 up -> [+S2] r2 d1 up -> [+S1] r1 d2 out
//   S1: c1 -> conv bn tanh;  S2: c2 -> avgpool conv bn tanh;  S3: c4 -> avgpool conv bn tanh
// 3x3 convs are followed by BN + LeakyReLU; r* are 1x1 depth reductions;
// `out` is a 3x3 conv with a sigmoid.
template <class T>
class DeepCameraNet {
 public:
  DeepCameraNet(const NetConfig& cfg, std::uint64_t seed);

  // x: (N, input_channels, H, W) with H, W multiples of 4. Sets every BN
  // layer to `mode`.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode);

  // Conv weights/biases in layer order, then BN gamma/beta in layer order.
  std::vector<nn::Tensor<T>> parameters() const;
  std::size_t param_count() const;

  std::vector<ConvLayer<T>>& convs() { return convs_; }
  const std::vector<ConvLayer<T>>& convs() const { return convs_; }
  std::vector<BnLayer<T>>& batch_norms() { return bns_; }
  const std::vector<BnLayer<T>>& batch_norms() const { return bns_; }
  const std::vector<SkipPath>& skip_paths() const { return skips_; }
  const NetConfig& config() const { return cfg_; }

  void zero_grad();

 private:
  nn::Tensor<T> conv(int idx, const nn::Tensor<T>& x) const;
  nn::Tensor<T> conv_bn_act(int conv_idx, int bn_idx, const nn::Tensor<T>& x, nn::ActivationKind act);

  NetConfig cfg_;
  std::vector<ConvLayer<T>> convs_;
  std::vector<BnLayer<T>> bns_;
  std::vector<SkipPath> skips_;
};

// Closed-form parameter count of the default topology at a given width.
std::size_t expected_param_count(int base_width, int input_channels = 1, int output_channels = 3);

// Per-channel |G_s1 * t - G_s2 * t| with reflective borders, min-max
// normalized over the whole image (each batch item separately) to [0,1].
// Constant images give an all-zero map. The result carries no graph.
template <class T>
nn::Tensor<T> dog_weight_map(const nn::Tensor<T>& t, double sigma1, double sigma2);

// alpha * mean((pred - target)^2) + (1 - alpha) * mean(W * |pred - target|),
// W = dog_weight_map of the target (or of the prediction, detached).
template <class T>
nn::Tensor<T> composite_loss(const nn::Tensor<T>& pred, const nn::Tensor<T>& target, const NetConfig& cfg);

// One training example: mosaic (1, 1, H, W) and gamma-sRGB target (1, 3, H, W).
struct TrainingPair {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<float> input;
  std::vector<float> target;
};

std::vector<TrainingPair> load_pairs(const Manifest& manifest, Split split);

// Stacks pairs[indices] into a batch. All pairs must share one size.
nn::Tensor<float> stack_inputs(const std::vector<TrainingPair>& pairs, const std::vector<std::size_t>& indices);
nn::Tensor<float> stack_targets(const std::vector<TrainingPair>& pairs, const std::vector<std::size_t>& indices);

struct TrainState {
  nn::AdamState<float> adam;
  int epoch = 0;  // completed epochs
  double lr = 1e-3;
  double best_val = std::numeric_limits<double>::infinity();
  double schedule_best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
};

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& rows);

// Optimizer step and validation on an owned network.
class Trainer {
 public:
  Trainer(DeepCameraNet<float>& net, const TrainConfig& cfg, TrainState state = {});

  // forward -> loss -> backward -> Adam at the current lr. Returns the loss.
  double step(const nn::Tensor<float>& input, const nn::Tensor<float>& target);
  // Mean loss per example in Eval mode, batched by cfg.batch.
  double evaluate(const std::vector<TrainingPair>& pairs) const;

  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }
  std::int64_t steps() const { return state_.adam.step; }

 private:
  DeepCameraNet<float>& net_;
  TrainConfig cfg_;
  TrainState state_;
};

struct TrainOutputs {
  std::optional<std::filesystem::path> checkpoint;      // best validation model
  std::optional<std::filesystem::path> history_csv;
  std::optional<std::filesystem::path> diagnostic;      // written on a non-finite loss
};

struct TrainHooks {
  // Replaces the measured validation loss (schedule testing).
  std::function<double(int epoch, double measured)> val_loss_override;
  std::function<void(const HistoryRow&)> on_epoch;
};

struct TrainResult {
  std::vector<HistoryRow> history;
  TrainState state;
  std::int64_t steps = 0;
  bool stopped_early = false;
  double last_batch_loss = 0.0;
};

// Epoch loop with seeded shuffling, plateau schedule and best-model
// checkpointing. Throws NumericError (after writing the diagnostic
// checkpoint, when configured) on a non-finite loss.
TrainResult train(DeepCameraNet<float>& net, const std::vector<TrainingPair>& train_set,
                  const std::vector<TrainingPair>& val_set, const TrainConfig& cfg, const TrainOutputs& outputs = {},
                  const TrainHooks& hooks = {});

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  DeepCameraNet<float> net;
  std::optional<TrainState> state;
};

void save_checkpoint(const std::filesystem::path& path, const DeepCameraNet<float>& net,
                     const TrainState* state = nullptr);
// Throws CheckpointFormatError, CheckpointVersionError or
// CheckpointTruncatedError; never returns a partial model.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Eval-mode forward on one raw. Output is gamma sRGB with every sample
// strictly inside (0,1).
Image infer(DeepCameraNet<float>& net, const RawFrame& raw);

}  // namespace dcam
