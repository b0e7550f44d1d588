#pragma once

#include <functional>
#include <vector>

#include "dcam/nn/tensor.hpp"

namespace dcam::nn {

// 'Same' cross-correlation, stride 1. weight: (out_ch, in_ch, k, k) with
// k in {1, 3}; bias: (out_ch, 1, 1, 1). Zero padding.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

enum class PoolKind { Max, Avg };

// 2x2 window, stride 2. Max routes the gradient to the first maximum in
// scan order. H and W must be even.
template <class T>
Tensor<T> pool2(const Tensor<T>& x, PoolKind kind);

// Nearest-neighbour x2 in H and W.
template <class T>
Tensor<T> upsample2(const Tensor<T>& x);

enum class ActivationKind { LeakyReLU, Tanh, Sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::LeakyReLU;
  double alpha = 0.2;  // LeakyReLU slope for v < 0
};

template <class T>
Tensor<T> activation(const Tensor<T>& x, Activation act);

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, int begin, int count);

enum class Mode { Train, Eval };

struct BatchNormOptions {
  double momentum = 0.99;
  double eps = 1e-3;
};

// Per-channel normalization. gamma/beta are learnable (1, C, 1, 1) tensors;
// running statistics are plain state.
template <class T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double momentum = 0.99;
  double eps = 1e-3;
  Mode mode = Mode::Train;

  explicit BatchNormState(int channels, BatchNormOptions opts = {});
  int channels() const { return static_cast<int>(running_mean.size()); }
};

// Train: batch statistics over (N, H, W), running stats updated with
// momentum (unbiased variance). Eval: running statistics.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& state);

// Elementwise arithmetic on equal shapes.
template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <class T>
Tensor<T> square(const Tensor<T>& x);
// |v|, with subgradient 0 at v == 0.
template <class T>
Tensor<T> abs(const Tensor<T>& x);

template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> mean(const Tensor<T>& x);

// Elementwise op from a value function and its derivative (both in terms of
// the input value).
template <class T>
Tensor<T> map_unary(const Tensor<T>& x, std::function<T(T)> f, std::function<T(T)> df,
                    const char* name);

}  // namespace dcam::nn
