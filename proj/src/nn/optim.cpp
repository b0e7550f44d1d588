#include "dcam/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcam/error.hpp"

namespace dcam::nn {

template <class T>
void adam_step(const std::vector<Tensor<T>>& params, AdamState<T>& state, double lr) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T(0));
      state.v.emplace_back(p.numel(), T(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) + " buffers for " +
                     std::to_string(params.size()) + " parameters");
  }
  ++state.step;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(o.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T> p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel() || v.size() != p.numel()) {
      throw ShapeError("adam: moment buffer " + std::to_string(i) + " does not match parameter shape " +
                       to_string(p.shape()));
    }
    auto data = p.data();
    auto grad = p.grad();
    const bool has_grad = !grad.empty();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const T g = has_grad ? grad[j] : T(0);
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      data[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
    }
  }
}

template void adam_step(const std::vector<Tensor<float>>&, AdamState<float>&, double);
template void adam_step(const std::vector<Tensor<double>>&, AdamState<double>&, double);

PlateauSchedule::PlateauSchedule(double lr0, double lr_min, int patience, double factor, double min_delta)
    : lr_(lr0), lr_min_(lr_min), patience_(patience), factor_(factor), min_delta_(min_delta) {
  if (!(lr0 > 0) || !(lr_min > 0) || lr_min > lr0) throw InvalidArgumentError("schedule: need 0 < lr_min <= lr0");
  if (patience < 1) throw InvalidArgumentError("schedule: patience must be >= 1");
  if (!(factor > 0 && factor < 1)) throw InvalidArgumentError("schedule: factor must lie in (0,1)");
}

double PlateauSchedule::step(double val_loss) {
  if (val_loss < best_ - min_delta_) {
    best_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ = std::max(lr_ * factor_, lr_min_);
    bad_epochs_ = 0;
  }
  return lr_;
}

void PlateauSchedule::restore(double lr, double best, int bad_epochs) {
  lr_ = lr;
  best_ = best;
  bad_epochs_ = bad_epochs;
}

}  // namespace dcam::nn
