#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dcam/nn/tensor.hpp"

namespace dcam::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

// First and second moment buffers, one per parameter, in parameter order.
template <class T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t step = 0;
  AdamOptions options;
};

// One bias-corrected Adam update on every parameter using its accumulated
// gradient (a missing gradient counts as zero). Allocates moment buffers on
// the first call.
template <class T>
void adam_step(const std::vector<Tensor<T>>& params, AdamState<T>& state, double lr);

// Halve-on-plateau learning rate rule driven by the validation loss.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr0, double lr_min, int patience, double factor, double min_delta = 1e-6);

  // Feeds one epoch's validation loss; returns the learning rate to use from
  // the next epoch on.
  double step(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int epochs_since_improvement() const { return bad_epochs_; }

  // Restores state from a checkpoint.
  void restore(double lr, double best, int bad_epochs);

 private:
  double lr_;
  double lr_min_;
  int patience_;
  double factor_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace dcam::nn
