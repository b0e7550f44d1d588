#include <algorithm>
#include <string>

#include "dcam/cnn.hpp"
#include "dcam/error.hpp"
#include "dcam/rng.hpp"

namespace dcam {

namespace {

// Layer indices in construction order.
enum ConvId { kC1, kC2, kC3, kC4, kC5, kC6, kS3, kR3, kD0, kS2, kR2, kD1, kS1, kR1, kD2, kOut, kNumConvs };
enum BnId { kBc1, kBc2, kBc3, kBc4, kBc5, kBc6, kBs3, kBd0, kBs2, kBd1, kBs1, kBd2, kNumBns };

}  // namespace

void NetConfig::validate() const {
  if (base_width < 1) throw InvalidArgumentError("base_width must be >= 1");
  if (input_channels < 1 || output_channels < 1) throw InvalidArgumentError("channel counts must be >= 1");
  if (!(alpha_loss >= 0.0 && alpha_loss <= 1.0)) throw InvalidArgumentError("alpha_loss must lie in [0,1]");
  if (!(dog_sigma1 > 0.0 && dog_sigma1 < dog_sigma2)) throw InvalidArgumentError("need 0 < dog_sigma1 < dog_sigma2");
  if (!(init_scale > 0.0)) throw InvalidArgumentError("init_scale must be > 0");
  if (!(leaky_alpha >= 0.0)) throw InvalidArgumentError("leaky_alpha must be >= 0");
  if (!(bn_eps > 0.0)) throw InvalidArgumentError("bn_eps must be > 0");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) throw InvalidArgumentError("bn_momentum must lie in (0,1)");
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0 && lr_min > 0.0 && lr_min <= lr0)) throw InvalidArgumentError("need 0 < lr_min <= lr0");
  if (batch < 1) throw InvalidArgumentError("batch must be >= 1");
  if (plateau_patience < 1) throw InvalidArgumentError("plateau_patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw InvalidArgumentError("plateau_factor must lie in (0,1)");
  if (max_epochs < 0) throw InvalidArgumentError("max_epochs must be >= 0");
}

bool SkipPath::has(const std::string& op) const { return std::find(ops.begin(), ops.end(), op) != ops.end(); }

std::size_t expected_param_count(int base_width, int input_channels, int output_channels) {
  const auto w = static_cast<std::size_t>(base_width);
  const std::size_t conv_ww = w * w * 9 + w;
  const std::size_t first = static_cast<std::size_t>(input_channels) * w * 9 + w;
  const std::size_t last = w * static_cast<std::size_t>(output_channels) * 9 + static_cast<std::size_t>(output_channels);
  const std::size_t reduce = 2 * w * w + w;
  return 11 * conv_ww + first + last + 3 * reduce + 12 * 2 * w;
}

template <class T>
DeepCameraNet<T>::DeepCameraNet(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const int w = cfg.base_width;
  Rng rng(seed);
  const T scale = static_cast<T>(cfg.init_scale);
  auto add_conv = [&](const char* name, int in, int out, int k) {
    std::vector<T> weights(static_cast<std::size_t>(out) * in * k * k);
    for (T& v : weights) v = static_cast<T>(rng.uniform(-1.0, 1.0)) * scale;
    convs_.push_back({name, nn::Tensor<T>(nn::Shape{out, in, k, k}, std::move(weights), true),
                      nn::Tensor<T>(nn::Shape{out, 1, 1, 1}, true)});
  };
  const nn::BatchNormOptions bn_opts{cfg.bn_momentum, cfg.bn_eps};
  auto add_bn = [&](const char* name) { bns_.push_back({name, nn::BatchNormState<T>(w, bn_opts)}); };

  add_conv("c1", cfg.input_channels, w, 3);
  add_conv("c2", w, w, 3);
  add_conv("c3", w, w, 3);
  add_conv("c4", w, w, 3);
  add_conv("c5", w, w, 3);
  add_conv("c6", w, w, 3);
  add_conv("s3", w, w, 3);
  add_conv("r3", 2 * w, w, 1);
  add_conv("d0", w, w, 3);
  add_conv("s2", w, w, 3);
  add_conv("r2", 2 * w, w, 1);
  add_conv("d1", w, w, 3);
  add_conv("s1", w, w, 3);
  add_conv("r1", 2 * w, w, 1);
  add_conv("d2", w, w, 3);
  add_conv("out", w, cfg.output_channels, 3);
  for (const char* name : {"c1", "c2", "c3", "c4", "c5", "c6", "s3", "d0", "s2", "d1", "s1", "d2"}) add_bn(name);

  skips_ = {
      {"S1", "c1", "full-res decoder (r1)", {"conv3x3", "batch_norm", "tanh"}},
      {"S2", "c2", "half-res decoder (r2)", {"avg_pool2", "conv3x3", "batch_norm", "tanh"}},
      {"S3", "c4", "bottleneck (r3)", {"avg_pool2", "conv3x3", "batch_norm", "tanh"}},
  };
}

template <class T>
nn::Tensor<T> DeepCameraNet<T>::conv(int idx, const nn::Tensor<T>& x) const {
  const auto& c = convs_[static_cast<std::size_t>(idx)];
  return nn::conv2d(x, c.weight, c.bias);
}

template <class T>
nn::Tensor<T> DeepCameraNet<T>::conv_bn_act(int conv_idx, int bn_idx, const nn::Tensor<T>& x,
                                            nn::ActivationKind act) {
  auto y = nn::batch_norm(conv(conv_idx, x), bns_[static_cast<std::size_t>(bn_idx)].state);
  return nn::activation(y, nn::Activation{act, cfg_.leaky_alpha});
}

template <class T>
nn::Tensor<T> DeepCameraNet<T>::forward(const nn::Tensor<T>& x, nn::Mode mode) {
  const nn::Shape s = x.shape();
  if (s.c != cfg_.input_channels) {
    throw ShapeError("network expects " + std::to_string(cfg_.input_channels) + " input channel(s), got " +
                     nn::to_string(s));
  }
  if (s.h % 4 != 0 || s.w % 4 != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("network input height and width must be positive multiples of 4, got " + nn::to_string(s));
  }
  for (auto& b : bns_) b.state.mode = mode;
  using nn::ActivationKind;
  const auto lrelu = ActivationKind::LeakyReLU;
  const auto tanh = ActivationKind::Tanh;

  auto a1 = conv_bn_act(kC1, kBc1, x, lrelu);
  auto a2 = conv_bn_act(kC2, kBc2, a1, lrelu);
  auto a3 = conv_bn_act(kC3, kBc3, nn::pool2(a2, nn::PoolKind::Max), lrelu);
  auto a4 = conv_bn_act(kC4, kBc4, a3, lrelu);
  auto a5 = conv_bn_act(kC5, kBc5, nn::pool2(a4, nn::PoolKind::Max), lrelu);
  auto a6 = conv_bn_act(kC6, kBc6, a5, lrelu);

  auto s3 = conv_bn_act(kS3, kBs3, nn::pool2(a4, nn::PoolKind::Avg), tanh);
  auto m = conv(kR3, nn::concat_channels(a6, s3));
  m = nn::upsample2(conv_bn_act(kD0, kBd0, m, lrelu));

  auto s2 = conv_bn_act(kS2, kBs2, nn::pool2(a2, nn::PoolKind::Avg), tanh);
  m = conv(kR2, nn::concat_channels(m, s2));
  m = nn::upsample2(conv_bn_act(kD1, kBd1, m, lrelu));

  auto s1 = conv_bn_act(kS1, kBs1, a1, tanh);
  m = conv(kR1, nn::concat_channels(m, s1));
  m = conv_bn_act(kD2, kBd2, m, lrelu);
  return nn::activation(conv(kOut, m), nn::Activation{nn::ActivationKind::Sigmoid, 0.0});
}

template <class T>
std::vector<nn::Tensor<T>> DeepCameraNet<T>::parameters() const {
  std::vector<nn::Tensor<T>> out;
  for (const auto& c : convs_) {
    out.push_back(c.weight);
    out.push_back(c.bias);
  }
  for (const auto& b : bns_) {
    out.push_back(b.state.gamma);
    out.push_back(b.state.beta);
  }
  return out;
}

template <class T>
std::size_t DeepCameraNet<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

template <class T>
void DeepCameraNet<T>::zero_grad() {
  for (auto& p : parameters()) p.zero_grad();
}

static_assert(kNumConvs == 16 && kNumBns == 12);

template class DeepCameraNet<float>;
template class DeepCameraNet<double>;

}  // namespace dcam
