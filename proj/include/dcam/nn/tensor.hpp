#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dcam::nn {

// (batch, channels, height, width)
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t spatial() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

template <class T>
struct TensorImpl;

// Graph recording switch for the current thread. Ops run under a NoGradGuard
// produce plain values with no back-edges.
bool grad_enabled();

// Keeps large activation buffers on the heap instead of fresh mmap'd pages
// (glibc only; no-op elsewhere). Call once at startup of training processes.
void tune_allocator_for_training();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Back-edge of the computation graph. `backward` reads the output's gradient
// and accumulates into the gradients of `inputs`.
template <class T>
struct Node {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  std::function<void(const TensorImpl<T>& out)> backward;
};

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first needed
  bool requires_grad = false;
  std::shared_ptr<Node<T>> node;  // null for leaves

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

// Shared handle to a rank-4 array that can take part in reverse-mode
// differentiation. Copies alias the same storage.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }
  // Empty span when no gradient has been accumulated.
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> grad_mut() { return impl_->ensure_grad(); }
  void zero_grad();

  // Reverse pass from this scalar. Gradients of leaves accumulate across
  // calls; gradients of intermediate nodes are recomputed each call.
  void backward();

  // Copy of the values with no graph attached.
  Tensor detach() const;

  const char* op() const { return impl_->node ? impl_->node->op : "leaf"; }
  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

  // Wraps an op result: records the node when any input requires a gradient.
  static Tensor from_op(Shape shape, std::vector<T> data, const char* op,
                        std::vector<std::shared_ptr<TensorImpl<T>>> inputs,
                        std::function<void(const TensorImpl<T>&)> backward);

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace dcam::nn
