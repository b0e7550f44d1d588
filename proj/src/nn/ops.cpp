#include "dcam/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "dcam/error.hpp"
#include "gemm.hpp"

namespace dcam::nn {

namespace {

template <class T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

// Per-thread reusable work buffers; conv calls never nest, so slot 0..2 are
// free whenever a conv forward or backward starts.
template <class T>
std::vector<T>& scratch(int slot, std::size_t size) {
  thread_local std::vector<T> buffers[3];
  auto& b = buffers[slot];
  if (b.size() < size) b.resize(size);
  return b;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// cols[(ci * 9 + ky * 3 + kx) * HW + y * W + x] = x[ci, y + ky - 1, x + kx - 1]
template <class T>
void im2col3(const T* src, int C, int H, int W, T* cols) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (int ci = 0; ci < C; ++ci) {
    const T* plane = src + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        for (int y = 0; y < H; ++y) {
          T* row = dst + static_cast<std::size_t>(y) * W;
          const int sy = y + dy;
          if (sy < 0 || sy >= H) {
            std::fill(row, row + W, T(0));
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(sy) * W;
          const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
          for (int x = 0; x < x_lo; ++x) row[x] = T(0);
          for (int x = x_lo; x < x_hi; ++x) row[x] = srow[x + dx];
          for (int x = x_hi; x < W; ++x) row[x] = T(0);
        }
      }
    }
  }
}

template <class T>
void col2im3_acc(const T* cols, int C, int H, int W, T* dst) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (int ci = 0; ci < C; ++ci) {
    T* plane = dst + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        for (int y = 0; y < H; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const T* row = src + static_cast<std::size_t>(y) * W;
          T* drow = plane + static_cast<std::size_t>(sy) * W;
          const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
          for (int x = x_lo; x < x_hi; ++x) drow[x + dx] += row[x];
        }
      }
    }
  }
}

template <class T>
Tensor<T> elementwise_binary(const Tensor<T>& a, const Tensor<T>& b, const char* name,
                             T (*f)(T, T), T (*da)(T, T, T), T (*db)(T, T, T)) {
  require(a.shape() == b.shape(), std::string(name) + ": shape mismatch " + to_string(a.shape()) +
                                      " vs " + to_string(b.shape()));
  const std::size_t n = a.numel();
  std::vector<T> out(n);
  auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i]);
  ImplPtr<T> ai = a.impl(), bi = b.impl();
  return Tensor<T>::from_op(a.shape(), std::move(out), name, {ai, bi},
                            [ai, bi, da, db](const TensorImpl<T>& o) {
                              const std::size_t n = o.data.size();
                              if (ai->requires_grad) {
                                auto& g = ai->ensure_grad();
                                for (std::size_t i = 0; i < n; ++i) {
                                  g[i] += o.grad[i] * da(ai->data[i], bi->data[i], o.data[i]);
                                }
                              }
                              if (bi->requires_grad) {
                                auto& g = bi->ensure_grad();
                                for (std::size_t i = 0; i < n; ++i) {
                                  g[i] += o.grad[i] * db(ai->data[i], bi->data[i], o.data[i]);
                                }
                              }
                            });
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const Shape xs = x.shape(), ws = weight.shape();
  require(ws.h == ws.w && (ws.h == 1 || ws.h == 3),
          "conv2d: kernel must be 1x1 or 3x3, got " + to_string(ws));
  require(xs.c == ws.c, "conv2d: input has " + std::to_string(xs.c) + " channels, weights expect " +
                            std::to_string(ws.c));
  require(bias.numel() == static_cast<std::size_t>(ws.n), "conv2d: bias length mismatch");
  const int N = xs.n, Cin = xs.c, H = xs.h, W = xs.w, Cout = ws.n, k = ws.h;
  const int HW = H * W;
  const int Kc = Cin * k * k;
  const Shape os{N, Cout, H, W};
  std::vector<T> out(os.numel());
  std::vector<T>& cols = scratch<T>(0, k == 3 ? static_cast<std::size_t>(Kc) * HW : 0);
  const T* wd = weight.data().data();
  const T* bd = bias.data().data();
  for (int n = 0; n < N; ++n) {
    const T* xn = x.data().data() + static_cast<std::size_t>(n) * Cin * HW;
    T* on = out.data() + static_cast<std::size_t>(n) * Cout * HW;
    for (int o = 0; o < Cout; ++o) std::fill(on + static_cast<std::size_t>(o) * HW, on + static_cast<std::size_t>(o + 1) * HW, bd[o]);
    const T* B = xn;
    if (k == 3) {
      im2col3(xn, Cin, H, W, cols.data());
      B = cols.data();
    }
    detail::gemm_acc(Cout, HW, Kc, wd, Kc, 1, B, on);
  }
  ImplPtr<T> xi = x.impl(), wi = weight.impl(), bi = bias.impl();
  return Tensor<T>::from_op(os, std::move(out), "conv2d", {xi, wi, bi}, [=](const TensorImpl<T>& o) {
    std::vector<T>& cols = scratch<T>(0, k == 3 ? static_cast<std::size_t>(Kc) * HW : 0);
    std::vector<T>& cols_t = scratch<T>(1, 0);
    std::vector<T>& dcols = scratch<T>(2, xi->requires_grad && k == 3 ? static_cast<std::size_t>(Kc) * HW : 0);
    for (int n = 0; n < N; ++n) {
      const T* go = o.grad.data() + static_cast<std::size_t>(n) * Cout * HW;
      const T* xn = xi->data.data() + static_cast<std::size_t>(n) * Cin * HW;
      if (bi->requires_grad) {
        auto& gb = bi->ensure_grad();
        for (int oc = 0; oc < Cout; ++oc) {
          T s = 0;
          const T* row = go + static_cast<std::size_t>(oc) * HW;
          for (int j = 0; j < HW; ++j) s += row[j];
          gb[static_cast<std::size_t>(oc)] += s;
        }
      }
      if (wi->requires_grad) {
        const T* B = xn;
        if (k == 3) {
          im2col3(xn, Cin, H, W, cols.data());
          B = cols.data();
        }
        // dW[Cout x Kc] += dOut[Cout x HW] * cols^T
        detail::gemm_acc_bt(Cout, Kc, HW, go, B, wi->ensure_grad().data(), cols_t);
      }
      if (xi->requires_grad) {
        T* gx = xi->ensure_grad().data() + static_cast<std::size_t>(n) * Cin * HW;
        // dcols[Kc x HW] = W^T[Kc x Cout] * dOut[Cout x HW]
        if (k == 3) {
          detail::gemm_acc(Kc, HW, Cout, wi->data.data(), 1, Kc, go, dcols.data(), false);
          col2im3_acc(dcols.data(), Cin, H, W, gx);
        } else {
          detail::gemm_acc(Kc, HW, Cout, wi->data.data(), 1, Kc, go, gx);
        }
      }
    }
  });
}

template <class T>
Tensor<T> pool2(const Tensor<T>& x, PoolKind kind) {
  const Shape xs = x.shape();
  require(xs.h % 2 == 0 && xs.w % 2 == 0, "pool2: spatial dims must be even, got " + to_string(xs));
  const Shape os{xs.n, xs.c, xs.h / 2, xs.w / 2};
  const std::size_t planes = static_cast<std::size_t>(xs.n) * xs.c;
  const int H = xs.h, W = xs.w, Ho = os.h, Wo = os.w;
  std::vector<T> out(os.numel());
  std::vector<std::uint32_t> argmax(kind == PoolKind::Max ? os.numel() : 0);
  const T* xd = x.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xd + p * H * W;
    for (int i = 0; i < Ho; ++i) {
      for (int j = 0; j < Wo; ++j) {
        const std::size_t oi = p * Ho * Wo + static_cast<std::size_t>(i) * Wo + j;
        const std::uint32_t idx[4] = {
            static_cast<std::uint32_t>((2 * i) * W + 2 * j), static_cast<std::uint32_t>((2 * i) * W + 2 * j + 1),
            static_cast<std::uint32_t>((2 * i + 1) * W + 2 * j), static_cast<std::uint32_t>((2 * i + 1) * W + 2 * j + 1)};
        if (kind == PoolKind::Max) {
          std::uint32_t best = idx[0];
          for (int q = 1; q < 4; ++q) {
            if (src[idx[q]] > src[best]) best = idx[q];
          }
          out[oi] = src[best];
          argmax[oi] = best;
        } else {
          out[oi] = (src[idx[0]] + src[idx[1]] + src[idx[2]] + src[idx[3]]) * T(0.25);
        }
      }
    }
  }
  ImplPtr<T> xi = x.impl();
  return Tensor<T>::from_op(
      os, std::move(out), kind == PoolKind::Max ? "max_pool2" : "avg_pool2", {xi},
      [xi, kind, planes, H, W, Ho, Wo, argmax = std::move(argmax)](const TensorImpl<T>& o) {
        auto& g = xi->ensure_grad();
        for (std::size_t p = 0; p < planes; ++p) {
          T* gp = g.data() + p * H * W;
          for (int i = 0; i < Ho; ++i) {
            for (int j = 0; j < Wo; ++j) {
              const std::size_t oi = p * Ho * Wo + static_cast<std::size_t>(i) * Wo + j;
              const T go = o.grad[oi];
              if (kind == PoolKind::Max) {
                gp[argmax[oi]] += go;
              } else {
                const T q = go * T(0.25);
                gp[(2 * i) * W + 2 * j] += q;
                gp[(2 * i) * W + 2 * j + 1] += q;
                gp[(2 * i + 1) * W + 2 * j] += q;
                gp[(2 * i + 1) * W + 2 * j + 1] += q;
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> upsample2(const Tensor<T>& x) {
  const Shape xs = x.shape();
  const Shape os{xs.n, xs.c, xs.h * 2, xs.w * 2};
  const std::size_t planes = static_cast<std::size_t>(xs.n) * xs.c;
  const int H = xs.h, W = xs.w, Wo = os.w;
  std::vector<T> out(os.numel());
  const T* xd = x.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xd + p * H * W;
    T* dst = out.data() + p * H * W * 4;
    for (int i = 0; i < H; ++i) {
      T* r0 = dst + static_cast<std::size_t>(2 * i) * Wo;
      T* r1 = r0 + Wo;
      for (int j = 0; j < W; ++j) {
        const T v = src[i * W + j];
        r0[2 * j] = r0[2 * j + 1] = r1[2 * j] = r1[2 * j + 1] = v;
      }
    }
  }
  ImplPtr<T> xi = x.impl();
  return Tensor<T>::from_op(os, std::move(out), "upsample2", {xi}, [xi, planes, H, W, Wo](const TensorImpl<T>& o) {
    auto& g = xi->ensure_grad();
    for (std::size_t p = 0; p < planes; ++p) {
      const T* src = o.grad.data() + p * H * W * 4;
      T* gp = g.data() + p * H * W;
      for (int i = 0; i < H; ++i) {
        const T* r0 = src + static_cast<std::size_t>(2 * i) * Wo;
        const T* r1 = r0 + Wo;
        for (int j = 0; j < W; ++j) gp[i * W + j] += r0[2 * j] + r0[2 * j + 1] + r1[2 * j] + r1[2 * j + 1];
      }
    }
  });
}

template <class T>
Tensor<T> activation(const Tensor<T>& x, Activation act) {
  const std::size_t n = x.numel();
  std::vector<T> out(n);
  auto xd = x.data();
  const T alpha = static_cast<T>(act.alpha);
  const char* name = "leaky_relu";
  switch (act.kind) {
    case ActivationKind::LeakyReLU:
      for (std::size_t i = 0; i < n; ++i) out[i] = xd[i] >= T(0) ? xd[i] : alpha * xd[i];
      break;
    case ActivationKind::Tanh:
      name = "tanh";
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(xd[i]);
      break;
    case ActivationKind::Sigmoid:
      name = "sigmoid";
      for (std::size_t i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-xd[i]));
      break;
  }
  ImplPtr<T> xi = x.impl();
  const ActivationKind kind = act.kind;
  return Tensor<T>::from_op(x.shape(), std::move(out), name, {xi}, [xi, kind, alpha](const TensorImpl<T>& o) {
    auto& g = xi->ensure_grad();
    const std::size_t n = o.data.size();
    switch (kind) {
      case ActivationKind::LeakyReLU:
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * (xi->data[i] >= T(0) ? T(1) : alpha);
        break;
      case ActivationKind::Tanh:
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * (T(1) - o.data[i] * o.data[i]);
        break;
      case ActivationKind::Sigmoid:
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * o.data[i] * (T(1) - o.data[i]);
        break;
    }
  });
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape as = a.shape(), bs = b.shape();
  require(as.n == bs.n && as.h == bs.h && as.w == bs.w,
          "concat_channels: mismatch " + to_string(as) + " vs " + to_string(bs));
  const Shape os{as.n, as.c + bs.c, as.h, as.w};
  const std::size_t hw = as.spatial();
  const std::size_t a_len = as.c * hw, b_len = bs.c * hw;
  std::vector<T> out(os.numel());
  for (int n = 0; n < as.n; ++n) {
    const auto a_src = a.data().begin() + static_cast<std::ptrdiff_t>(n * a_len);
    const auto b_src = b.data().begin() + static_cast<std::ptrdiff_t>(n * b_len);
    auto dst = out.begin() + static_cast<std::ptrdiff_t>(n * (a_len + b_len));
    std::copy(a_src, a_src + static_cast<std::ptrdiff_t>(a_len), dst);
    std::copy(b_src, b_src + static_cast<std::ptrdiff_t>(b_len), dst + static_cast<std::ptrdiff_t>(a_len));
  }
  ImplPtr<T> ai = a.impl(), bi = b.impl();
  const int batch = as.n;
  return Tensor<T>::from_op(os, std::move(out), "concat_channels", {ai, bi},
                            [ai, bi, batch, a_len, b_len](const TensorImpl<T>& o) {
                              for (int n = 0; n < batch; ++n) {
                                const T* src = o.grad.data() + n * (a_len + b_len);
                                if (ai->requires_grad) {
                                  T* g = ai->ensure_grad().data() + n * a_len;
                                  for (std::size_t i = 0; i < a_len; ++i) g[i] += src[i];
                                }
                                if (bi->requires_grad) {
                                  T* g = bi->ensure_grad().data() + n * b_len;
                                  for (std::size_t i = 0; i < b_len; ++i) g[i] += src[a_len + i];
                                }
                              }
                            });
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& x, int begin, int count) {
  const Shape xs = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= xs.c, "slice_channels: range out of bounds");
  const Shape os{xs.n, count, xs.h, xs.w};
  const std::size_t hw = xs.spatial();
  std::vector<T> out(os.numel());
  for (int n = 0; n < xs.n; ++n) {
    const T* src = x.data().data() + (static_cast<std::size_t>(n) * xs.c + begin) * hw;
    std::copy(src, src + count * hw, out.data() + static_cast<std::size_t>(n) * count * hw);
  }
  ImplPtr<T> xi = x.impl();
  const int C = xs.c, batch = xs.n;
  return Tensor<T>::from_op(os, std::move(out), "slice_channels", {xi},
                            [xi, C, batch, begin, count, hw](const TensorImpl<T>& o) {
                              auto& g = xi->ensure_grad();
                              for (int n = 0; n < batch; ++n) {
                                T* dst = g.data() + (static_cast<std::size_t>(n) * C + begin) * hw;
                                const T* src = o.grad.data() + static_cast<std::size_t>(n) * count * hw;
                                for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
                              }
                            });
}

template <class T>
BatchNormState<T>::BatchNormState(int channels, BatchNormOptions opts)
    : gamma(Shape{1, channels, 1, 1}, std::vector<T>(static_cast<std::size_t>(channels), T(1)), true),
      beta(Shape{1, channels, 1, 1}, true),
      running_mean(static_cast<std::size_t>(channels), T(0)),
      running_var(static_cast<std::size_t>(channels), T(1)),
      momentum(opts.momentum),
      eps(opts.eps) {
  if (!(opts.eps > 0)) throw InvalidArgumentError("batch norm eps must be > 0");
  if (!(opts.momentum > 0 && opts.momentum < 1)) throw InvalidArgumentError("batch norm momentum must lie in (0,1)");
}

template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormState<T>& st) {
  const Shape xs = x.shape();
  require(xs.c == st.channels(), "batch_norm: channel mismatch");
  const int C = xs.c, N = xs.n;
  const std::size_t hw = xs.spatial();
  const std::size_t m = static_cast<std::size_t>(N) * hw;
  const T* xd = x.data().data();
  const T* gd = st.gamma.data().data();
  const T* bd = st.beta.data().data();
  std::vector<T> out(xs.numel());
  std::vector<T> inv_std(static_cast<std::size_t>(C));
  std::vector<T> xhat;
  const bool train = st.mode == Mode::Train;
  if (train) {
    if (m < 2) throw ShapeError("batch_norm: training needs at least 2 values per channel, got " + std::to_string(m));
    xhat.resize(xs.numel());
  }
  for (int c = 0; c < C; ++c) {
    T mu, var;
    if (train) {
      double s = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = xd + (static_cast<std::size_t>(n) * C + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mean_d = s / static_cast<double>(m);
      double s2 = 0;
      for (int n = 0; n < N; ++n) {
        const T* p = xd + (static_cast<std::size_t>(n) * C + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s2 += (p[i] - mean_d) * (p[i] - mean_d);
      }
      mu = static_cast<T>(mean_d);
      var = static_cast<T>(s2 / static_cast<double>(m));
      const auto cu = static_cast<std::size_t>(c);
      const T mom = static_cast<T>(st.momentum);
      st.running_mean[cu] = mom * st.running_mean[cu] + (T(1) - mom) * mu;
      st.running_var[cu] = mom * st.running_var[cu] +
                           (T(1) - mom) * static_cast<T>(s2 / static_cast<double>(m - 1));
    } else {
      mu = st.running_mean[static_cast<std::size_t>(c)];
      var = st.running_var[static_cast<std::size_t>(c)];
    }
    const T is = T(1) / std::sqrt(var + static_cast<T>(st.eps));
    inv_std[static_cast<std::size_t>(c)] = is;
    for (int n = 0; n < N; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T h = (xd[off + i] - mu) * is;
        if (train) xhat[off + i] = h;
        out[off + i] = gd[c] * h + bd[c];
      }
    }
  }
  ImplPtr<T> xi = x.impl(), gi = st.gamma.impl(), bi = st.beta.impl();
  std::vector<T> running_mean = train ? std::vector<T>{} : st.running_mean;
  return Tensor<T>::from_op(
      xs, std::move(out), "batch_norm", {xi, gi, bi},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](const TensorImpl<T>& o) {
        for (int c = 0; c < C; ++c) {
          const auto cu = static_cast<std::size_t>(c);
          double sum_g = 0, sum_gx = 0;
          for (int n = 0; n < N; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              const T h = train ? xhat[off + i] : (xi->data[off + i] - running_mean[cu]) * inv_std[cu];
              sum_g += o.grad[off + i];
              sum_gx += o.grad[off + i] * h;
            }
          }
          if (bi->requires_grad) bi->ensure_grad()[cu] += static_cast<T>(sum_g);
          if (gi->requires_grad) gi->ensure_grad()[cu] += static_cast<T>(sum_gx);
          if (!xi->requires_grad) continue;
          auto& gx = xi->ensure_grad();
          const T gamma = gi->data[cu];
          const T is = inv_std[cu];
          const T mean_g = static_cast<T>(sum_g / static_cast<double>(m));
          const T mean_gx = static_cast<T>(sum_gx / static_cast<double>(m));
          for (int n = 0; n < N; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              if (train) {
                gx[off + i] += gamma * is * (o.grad[off + i] - mean_g - xhat[off + i] * mean_gx);
              } else {
                gx[off + i] += gamma * is * o.grad[off + i];
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(1); });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(-1); });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise_binary<T>(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y, T) { return y; },
      [](T x, T, T) { return x; });
}

template <class T>
Tensor<T> map_unary(const Tensor<T>& x, std::function<T(T)> f, std::function<T(T)> df, const char* name) {
  const std::size_t n = x.numel();
  std::vector<T> out(n);
  auto xd = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(xd[i]);
  ImplPtr<T> xi = x.impl();
  return Tensor<T>::from_op(x.shape(), std::move(out), name, {xi}, [xi, df = std::move(df)](const TensorImpl<T>& o) {
    auto& g = xi->ensure_grad();
    for (std::size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i] * df(xi->data[i]);
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return map_unary<T>(x, [factor](T v) { return v * factor; }, [factor](T) { return factor; }, "scale");
}

template <class T>
Tensor<T> square(const Tensor<T>& x) {
  return map_unary<T>(x, [](T v) { return v * v; }, [](T v) { return T(2) * v; }, "square");
}

template <class T>
Tensor<T> abs(const Tensor<T>& x) {
  return map_unary<T>(
      x, [](T v) { return std::abs(v); },
      [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); }, "abs");
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  double s = 0;
  for (T v : x.data()) s += v;
  ImplPtr<T> xi = x.impl();
  return Tensor<T>::from_op(Shape{1, 1, 1, 1}, {static_cast<T>(s)}, "sum", {xi}, [xi](const TensorImpl<T>& o) {
    auto& g = xi->ensure_grad();
    for (T& v : g) v += o.grad[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  double s = 0;
  for (T v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  ImplPtr<T> xi = x.impl();
  return Tensor<T>::from_op(Shape{1, 1, 1, 1}, {static_cast<T>(s / n)}, "mean", {xi}, [xi, n](const TensorImpl<T>& o) {
    auto& g = xi->ensure_grad();
    const T share = static_cast<T>(o.grad[0] / n);
    for (T& v : g) v += share;
  });
}

#define DCAM_INSTANTIATE_OPS(T)                                                               \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> pool2(const Tensor<T>&, PoolKind);                                       \
  template Tensor<T> upsample2(const Tensor<T>&);                                             \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int);                              \
  template struct BatchNormState<T>;                                                          \
  template Tensor<T> batch_norm(const Tensor<T>&, BatchNormState<T>&);                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template Tensor<T> square(const Tensor<T>&);                                                \
  template Tensor<T> abs(const Tensor<T>&);                                                   \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> mean(const Tensor<T>&);                                                  \
  template Tensor<T> map_unary(const Tensor<T>&, std::function<T(T)>, std::function<T(T)>,    \
                               const char*);

DCAM_INSTANTIATE_OPS(float)
DCAM_INSTANTIATE_OPS(double)

#undef DCAM_INSTANTIATE_OPS

}  // namespace dcam::nn
