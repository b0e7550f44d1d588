#include <algorithm>
#include <cmath>

#include "dcam/cnn.hpp"
#include "dcam/error.hpp"
#include "dcam/filters.hpp"

namespace dcam {

template <class T>
nn::Tensor<T> dog_weight_map(const nn::Tensor<T>& t, double sigma1, double sigma2) {
  if (!(sigma1 > 0.0 && sigma1 < sigma2)) throw InvalidArgumentError("dog_weight_map: need 0 < sigma1 < sigma2");
  const nn::Shape s = t.shape();
  const std::size_t hw = s.spatial();
  const std::size_t per_item = static_cast<std::size_t>(s.c) * hw;
  std::vector<T> out(s.numel());
  std::vector<double> plane(hw);
  for (int n = 0; n < s.n; ++n) {
    T* dst = out.data() + static_cast<std::size_t>(n) * per_item;
    for (int c = 0; c < s.c; ++c) {
      const T* src = t.data().data() + static_cast<std::size_t>(n) * per_item + static_cast<std::size_t>(c) * hw;
      std::copy(src, src + hw, plane.begin());
      const auto g1 = gaussian_blur(plane, s.w, s.h, sigma1);
      const auto g2 = gaussian_blur(plane, s.w, s.h, sigma2);
      for (std::size_t i = 0; i < hw; ++i) dst[static_cast<std::size_t>(c) * hw + i] = static_cast<T>(std::abs(g1[i] - g2[i]));
    }
    const auto [lo, hi] = std::minmax_element(dst, dst + per_item);
    const T lo_v = *lo, range = *hi - *lo;
    // Range below float noise counts as constant.
    if (!(range > T(1e-12))) {
      std::fill(dst, dst + per_item, T(0));
    } else {
      for (std::size_t i = 0; i < per_item; ++i) dst[i] = (dst[i] - lo_v) / range;
    }
  }
  return nn::Tensor<T>(s, std::move(out), false);
}

template <class T>
nn::Tensor<T> composite_loss(const nn::Tensor<T>& pred, const nn::Tensor<T>& target, const NetConfig& cfg) {
  if (!(pred.shape() == target.shape())) {
    throw ShapeError("composite_loss: prediction " + nn::to_string(pred.shape()) + " vs target " +
                     nn::to_string(target.shape()));
  }
  const nn::Tensor<T> weights =
      dog_weight_map(cfg.dog_on_prediction ? pred.detach() : target, cfg.dog_sigma1, cfg.dog_sigma2);
  const nn::Tensor<T> diff = nn::sub(pred, target.detach());
  const T alpha = static_cast<T>(cfg.alpha_loss);
  auto mse = nn::scale(nn::mean(nn::square(diff)), alpha);
  auto reg = nn::scale(nn::mean(nn::mul(nn::abs(diff), weights)), T(1) - alpha);
  return nn::add(mse, reg);
}

template nn::Tensor<float> dog_weight_map(const nn::Tensor<float>&, double, double);
template nn::Tensor<double> dog_weight_map(const nn::Tensor<double>&, double, double);
template nn::Tensor<float> composite_loss(const nn::Tensor<float>&, const nn::Tensor<float>&, const NetConfig&);
template nn::Tensor<double> composite_loss(const nn::Tensor<double>&, const nn::Tensor<double>&, const NetConfig&);

}  // namespace dcam
