#include "dcam/nn/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "dcam/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace dcam::nn {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

void tune_allocator_for_training() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

template <class T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<TensorImpl<T>>()) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor dimension " + to_string(shape));
  }
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), T(0));
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl<T>>()) {
  if (data.size() != shape.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                     to_string(shape));
  }
  impl_->shape = shape;
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1, 1, 1, 1}, std::vector<T>{value}, requires_grad);
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
  return impl_->data[0];
}

template <class T>
void Tensor<T>::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <class T>
void Tensor<T>::backward() {
  if (numel() != 1) throw ShapeError("backward() needs a scalar output, got " + to_string(shape()));
  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<TensorImpl<T>*> order;
  std::unordered_set<TensorImpl<T>*> seen;
  std::vector<std::pair<TensorImpl<T>*, std::size_t>> stack{{impl_.get(), 0}};
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      TensorImpl<T>* child = t->node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }
  for (TensorImpl<T>* t : order) {
    if (!t->node) continue;
    auto& g = t->ensure_grad();
    std::fill(g.begin(), g.end(), T(0));
  }
  impl_->ensure_grad();
  impl_->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl<T>* t = *it;
    if (t->node && t->node->backward) t->node->backward(*t);
  }
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(shape(), impl_->data, false);
}

template <class T>
Tensor<T> Tensor<T>::from_op(Shape shape, std::vector<T> data, const char* op,
                             std::vector<std::shared_ptr<TensorImpl<T>>> inputs,
                             std::function<void(const TensorImpl<T>&)> backward) {
  Tensor out(shape, std::move(data), false);
  const bool needs_grad = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                      [](const auto& in) { return in->requires_grad; });
  if (needs_grad) {
    out.impl_->requires_grad = true;
    auto node = std::make_shared<Node<T>>();
    node->op = op;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
    out.impl_->node = std::move(node);
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace dcam::nn
