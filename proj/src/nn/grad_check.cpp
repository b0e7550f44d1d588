#include "dcam/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "dcam/error.hpp"

namespace dcam::nn {

GradCheckReport grad_check(const std::function<Tensor<double>(const std::vector<Tensor<double>>&)>& f,
                           std::vector<Tensor<double>> inputs, double h, double tol, double floor) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  Tensor<double> out = f(inputs);
  if (out.numel() != 1) throw ShapeError("grad_check: builder must return a scalar, got " + to_string(out.shape()));
  out.backward();

  GradCheckReport r;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<double> analytic(inputs[i].numel(), 0.0);
    if (inputs[i].has_grad()) std::copy(inputs[i].grad().begin(), inputs[i].grad().end(), analytic.begin());
    auto data = inputs[i].data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double saved = data[j];
      data[j] = saved + h;
      const double up = f(inputs).item();
      data[j] = saved - h;
      const double down = f(inputs).item();
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[j] - numeric) /
                         std::max({std::abs(analytic[j]), std::abs(numeric), floor});
      ++r.coordinates;
      if (err > r.max_rel_error || r.coordinates == 1) {
        r.max_rel_error = err;
        r.worst_input = i;
        r.worst_index = j;
        r.analytic = analytic[j];
        r.numeric = numeric;
      }
    }
  }
  r.passed = r.max_rel_error < tol;
  return r;
}

GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, Tensor<double> x,
                           double h, double tol, double floor) {
  return grad_check([&f](const std::vector<Tensor<double>>& in) { return f(in[0]); },
                    std::vector<Tensor<double>>{std::move(x)}, h, tol, floor);
}

}  // namespace dcam::nn
