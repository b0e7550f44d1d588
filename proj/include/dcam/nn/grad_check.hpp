#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "dcam/nn/tensor.hpp"

namespace dcam::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at the worst coordinate
  double numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

// Compares backprop gradients of a scalar graph against central differences
// over every coordinate of every input. Relative error is
// |a - n| / max(|a|, |n|, floor). The builder is called once per perturbation
// and must be a pure function of the input values.
GradCheckReport grad_check(const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
                           std::vector<Tensor<double>> inputs, double h = 1e-5, double tol = 1e-4,
                           double floor = 1e-6);

GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, Tensor<double> x,
                           double h = 1e-5, double tol = 1e-4, double floor = 1e-6);

}  // namespace dcam::nn
