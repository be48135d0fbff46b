// Neural-net building blocks: conv layer with optional batch-norm + ReLU,
// and the sum-of-squares loss. Everything is templated on the scalar type;
// float paths run through the dispatched SIMD kernels, double paths run the
// reference kernels so gradients can be checked in full precision.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "xlc/kernels.hpp"
#include "xlc/kernels_ref.hpp"
#include "xlc/tensor.hpp"

namespace xlc {

inline constexpr double kBnEps = 1e-5;
// Weight of the *old* running statistics when new batch statistics are
// folded in: running = mu * running + (1 - mu) * batch.
inline constexpr double kBnMomentum = 0.9;

enum class BnMode { train, infer };

template <typename T>
struct BnParams {
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;  // tracks the biased batch variance

  void init(int channels) {
    gamma.assign(channels, T(1));
    beta.assign(channels, T(0));
    running_mean.assign(channels, T(0));
    running_var.assign(channels, T(1));
  }
  int channels() const { return static_cast<int>(gamma.size()); }
};

template <typename T>
struct ConvLayer {
  // Kernels live in a Tensor4 indexed (out_ch, in_ch, tap_row, tap_col);
  // its storage order is exactly the canonical kernel layout.
  Tensor4<T> kernels;
  std::vector<T> bias;
  bool batch_norm = false;
  bool relu = false;
  BnParams<T> bn;

  int out_channels() const { return kernels.n; }
  int in_channels() const { return kernels.c; }
  int ksize() const { return kernels.h; }
};

template <typename T>
kernels::ConvShape conv_shape(const ConvLayer<T>& l, const Tensor4<T>& in) {
  if (in.c != l.in_channels())
    throw std::invalid_argument("conv2d: input has " + std::to_string(in.c) +
                                " channels, layer expects " + std::to_string(l.in_channels()));
  if (l.kernels.h != l.kernels.w) throw std::invalid_argument("conv2d: kernels must be square");
  return kernels::ConvShape{in.n, in.h, in.w, l.in_channels(), l.out_channels(), l.ksize()};
}

template <typename T>
Tensor4<T> conv2d(const ConvLayer<T>& l, const Tensor4<T>& in, kernels::Backend b) {
  const kernels::ConvShape s = conv_shape(l, in);
  Tensor4<T> out(in.n, l.out_channels(), in.h, in.w);
  if constexpr (std::is_same_v<T, float>)
    kernels::conv2d_forward(s, in.data(), l.kernels.data(), l.bias.data(), out.data(), b);
  else
    kernels::conv2d_forward_ref(s, in.data(), l.kernels.data(), l.bias.data(), out.data());
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor4<T> dkernels;
  std::vector<T> dbias;
};

// Returns dL/din (empty tensor when need_input_grad is false, e.g. the first
// layer of a net).
template <typename T>
Tensor4<T> conv2d_backward(const ConvLayer<T>& l, const Tensor4<T>& in, const Tensor4<T>& gout,
                           ConvGrads<T>& g, kernels::Backend b, bool need_input_grad = true) {
  const kernels::ConvShape s = conv_shape(l, in);
  if (gout.n != in.n || gout.h != in.h || gout.w != in.w || gout.c != l.out_channels())
    throw std::invalid_argument("conv2d_backward: gradient shape mismatch");
  g.dkernels = Tensor4<T>(l.kernels.n, l.kernels.c, l.kernels.h, l.kernels.w);
  g.dbias.assign(l.bias.size(), T(0));
  Tensor4<T> gin;
  if constexpr (std::is_same_v<T, float>) {
    kernels::conv2d_backward_weights(s, in.data(), gout.data(), g.dkernels.data(),
                                     g.dbias.data(), b);
    if (need_input_grad) {
      gin = Tensor4<T>(in.n, in.c, in.h, in.w);
      kernels::conv2d_backward_input(s, gout.data(), l.kernels.data(), gin.data(), b);
    }
  } else {
    kernels::conv2d_backward_weights_ref(s, in.data(), gout.data(), g.dkernels.data(),
                                         g.dbias.data());
    if (need_input_grad) {
      gin = Tensor4<T>(in.n, in.c, in.h, in.w);
      kernels::conv2d_backward_input_ref(s, gout.data(), l.kernels.data(), gin.data());
    }
  }
  return gin;
}

// Per-channel statistics captured by a training-mode forward pass.
template <typename T>
struct BnFwd {
  std::vector<T> mean, var, invstd;
};

template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& in, const BnParams<T>& p, BnMode mode,
                             BnFwd<T>* cache = nullptr) {
  const int C = in.c;
  if (p.channels() != C) throw std::invalid_argument("batchnorm_forward: channel mismatch");
  if (mode == BnMode::train && in.n < 2)
    throw std::invalid_argument("batchnorm_forward: train mode needs a batch of at least 2");
  const size_t pixels = in.size() / C;
  Tensor4<T> out(in.n, in.c, in.h, in.w);

  std::vector<T> mean(C), invstd(C), var(C);
  if (mode == BnMode::train) {
    std::vector<double> sum(C, 0.0), sumsq(C, 0.0);
    const T* x = in.data();
    for (size_t pI = 0; pI < pixels; ++pI, x += C)
      for (int c = 0; c < C; ++c) {
        const double v = static_cast<double>(x[c]);
        sum[c] += v;
        sumsq[c] += v * v;
      }
    for (int c = 0; c < C; ++c) {
      const double m = sum[c] / static_cast<double>(pixels);
      const double v = std::max(0.0, sumsq[c] / static_cast<double>(pixels) - m * m);
      mean[c] = static_cast<T>(m);
      var[c] = static_cast<T>(v);
      invstd[c] = static_cast<T>(1.0 / std::sqrt(v + kBnEps));
    }
    if (cache) {
      cache->mean = mean;
      cache->var = var;
      cache->invstd = invstd;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = p.running_mean[c];
      var[c] = p.running_var[c];
      invstd[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[c]) + kBnEps));
    }
  }

  // Fold affine into one multiply-add per element: out = x * a + b.
  std::vector<T> a(C), b(C);
  for (int c = 0; c < C; ++c) {
    a[c] = p.gamma[c] * invstd[c];
    b[c] = p.beta[c] - mean[c] * a[c];
  }
  const T* x = in.data();
  T* y = out.data();
  for (size_t pI = 0; pI < pixels; ++pI, x += C, y += C)
    for (int c = 0; c < C; ++c) y[c] = x[c] * a[c] + b[c];
  return out;
}

template <typename T>
void batchnorm_update_running(BnParams<T>& p, const BnFwd<T>& cache) {
  const T keep = static_cast<T>(kBnMomentum);
  const T take = static_cast<T>(1.0 - kBnMomentum);
  for (size_t c = 0; c < p.running_mean.size(); ++c) {
    p.running_mean[c] = keep * p.running_mean[c] + take * cache.mean[c];
    p.running_var[c] = keep * p.running_var[c] + take * cache.var[c];
  }
}

template <typename T>
struct BnGrads {
  std::vector<T> dgamma, dbeta;
};

// Backward through training-mode normalization. `in` is the tensor the
// forward pass normalized (the conv output).
template <typename T>
Tensor4<T> batchnorm_backward(const Tensor4<T>& gout, const Tensor4<T>& in, const BnParams<T>& p,
                              const BnFwd<T>& cache, BnGrads<T>& grads) {
  const int C = in.c;
  const size_t pixels = in.size() / C;
  const double m = static_cast<double>(pixels);

  // Channel reductions: sumd = sum dL/dy, sumdx = sum dL/dy * xhat.
  std::vector<double> sumd(C, 0.0), sumdx(C, 0.0);
  {
    const T* g = gout.data();
    const T* x = in.data();
    for (size_t pI = 0; pI < pixels; ++pI, g += C, x += C)
      for (int c = 0; c < C; ++c) {
        const double xhat = (static_cast<double>(x[c]) - cache.mean[c]) * cache.invstd[c];
        sumd[c] += g[c];
        sumdx[c] += static_cast<double>(g[c]) * xhat;
      }
  }
  grads.dgamma.resize(C);
  grads.dbeta.resize(C);
  for (int c = 0; c < C; ++c) {
    grads.dgamma[c] = static_cast<T>(sumdx[c]);
    grads.dbeta[c] = static_cast<T>(sumd[c]);
  }

  // dL/dx = (gamma * invstd / m) * (m*dy - sum(dy) - xhat * sum(dy*xhat))
  Tensor4<T> gin(in.n, in.c, in.h, in.w);
  std::vector<double> scale(C), meanv(C), invstdv(C);
  for (int c = 0; c < C; ++c) {
    scale[c] = static_cast<double>(p.gamma[c]) * cache.invstd[c] / m;
    meanv[c] = cache.mean[c];
    invstdv[c] = cache.invstd[c];
  }
  const T* g = gout.data();
  const T* x = in.data();
  T* o = gin.data();
  for (size_t pI = 0; pI < pixels; ++pI, g += C, x += C, o += C)
    for (int c = 0; c < C; ++c) {
      const double xhat = (static_cast<double>(x[c]) - meanv[c]) * invstdv[c];
      o[c] = static_cast<T>(scale[c] * (m * g[c] - sumd[c] - xhat * sumdx[c]));
    }
  return gin;
}

template <typename T>
void relu_inplace(Tensor4<T>& x) {
  for (T& v : x.v)
    if (v < T(0)) v = T(0);
}

// dL/din given the forward *output*; entries clamped by the forward pass
// (out == 0) get zero gradient.
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& gout, const Tensor4<T>& out) {
  if (!gout.same_shape(out)) throw std::invalid_argument("relu_backward: shape mismatch");
  Tensor4<T> gin(gout.n, gout.c, gout.h, gout.w);
  for (size_t i = 0; i < gout.v.size(); ++i) gin.v[i] = out.v[i] > T(0) ? gout.v[i] : T(0);
  return gin;
}

// L = (1/N) sum_n ||pred_n - target_n||^2, N = batch size; the gradient wrt
// pred is (2/N)(pred - target).
template <typename T>
std::pair<double, Tensor4<T>> mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
  Tensor4<T> grad(pred.n, pred.c, pred.h, pred.w);
  double sse = 0.0;
  const double inv_n = 1.0 / static_cast<double>(pred.n);
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    sse += d * d;
    grad.v[i] = static_cast<T>(2.0 * inv_n * d);
  }
  return {sse * inv_n, std::move(grad)};
}

}  // namespace xlc
