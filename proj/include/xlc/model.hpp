// The denoiser: a single residual block of zero-padded conv layers that
// estimates the noise in an LS channel grid, subtracted from the input.
// Topology is fixed (conv -> BN -> ReLU except the plain last layer), so the
// backward pass is hand-differentiated here rather than via a general graph.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "xlc/estimate.hpp"
#include "xlc/layers.hpp"
#include "xlc/rng.hpp"
#include "xlc/tensor.hpp"

namespace xlc {

struct NetConfig {
  int layers = 9;        // conv layer count C
  int hidden = 64;       // kernels per hidden layer
  int io_channels = 2;   // real + imaginary planes
  int ksize = 3;         // F, odd
  int rows = 16, cols = 16;

  void validate() const {
    if (layers < 2) throw std::invalid_argument("NetConfig: need at least 2 layers");
    if (hidden < 1) throw std::invalid_argument("NetConfig: need at least 1 hidden kernel");
    if (ksize < 1 || ksize % 2 == 0) throw std::invalid_argument("NetConfig: kernel side must be odd");
    if (rows < 1 || cols < 1) throw std::invalid_argument("NetConfig: grid dims must be positive");
  }
};

template <typename T>
struct ModelT {
  std::vector<ConvLayer<T>> layers;
  int rows = 0, cols = 0;

  int io_channels() const { return layers.empty() ? 0 : layers.front().in_channels(); }
};

using Model = ModelT<float>;

// Layers 1..C-1 are (conv -> BN -> ReLU); the last is a bare conv. Every
// layer's kernels start Xavier-uniform (bound sqrt(6/(fan_in+fan_out))),
// biases zero. The final layer uses the same rule as the rest on purpose:
// its weights then live in the same magnitude range as the hidden layers,
// so a global magnitude-pruning threshold treats it fairly. (Zero-starting
// it makes the fresh net an exact identity, but a trained output layer
// settles at whatever scale the residual target needs — empirically several
// times below the Xavier range of the BN-normalized hidden layers — and a
// global threshold then removes the entire layer, severing the residual
// path.) Zeroing the final layer by hand still yields the exact-identity
// behavior when wiring needs to be verified.
template <typename T>
ModelT<T> build_denoiser(const NetConfig& cfg, uint64_t seed) {
  cfg.validate();
  ModelT<T> m;
  m.rows = cfg.rows;
  m.cols = cfg.cols;
  for (int l = 0; l < cfg.layers; ++l) {
    const int cin = l == 0 ? cfg.io_channels : cfg.hidden;
    const int cout = l == cfg.layers - 1 ? cfg.io_channels : cfg.hidden;
    ConvLayer<T> layer;
    layer.kernels = Tensor4<T>(cout, cin, cfg.ksize, cfg.ksize);
    layer.bias.assign(cout, T(0));
    const bool last = l == cfg.layers - 1;
    layer.batch_norm = !last;
    layer.relu = !last;
    if (layer.batch_norm) layer.bn.init(cout);
    const double fan_in = static_cast<double>(cin) * cfg.ksize * cfg.ksize;
    const double fan_out = static_cast<double>(cout) * cfg.ksize * cfg.ksize;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Pcg32 rng = make_stream(seed, stream_domain::init, static_cast<uint64_t>(l));
    for (auto& w : layer.kernels.v) w = static_cast<T>(rng.uniform(-bound, bound));
    m.layers.push_back(std::move(layer));
  }
  return m;
}

inline Model build_xlcnet(const NetConfig& cfg, uint64_t seed) {
  return build_denoiser<float>(cfg, seed);
}

// Everything the backward pass needs from one forward evaluation.
template <typename T>
struct LayerCache {
  Tensor4<T> input;     // what the conv consumed
  Tensor4<T> conv_out;  // pre-BN pre-ReLU
  BnFwd<T> bn;
};

template <typename T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
  Tensor4<T> stack_out;  // CNN(x), the noise estimate
};

// out = in - stack(in). Pass a cache (and BnMode::train) when gradients will
// be taken; infer mode normalizes with running statistics and caches nothing.
template <typename T>
Tensor4<T> model_forward(const ModelT<T>& m, const Tensor4<T>& in, BnMode mode,
                         std::type_identity_t<ForwardCache<T>*> cache = nullptr,
                         kernels::Backend b = kernels::best_backend()) {
  if (m.layers.empty()) throw std::invalid_argument("model_forward: empty model");
  if (in.h != m.rows || in.w != m.cols || in.c != m.io_channels())
    throw std::invalid_argument("model_forward: input grid does not match the model");
  if (cache) cache->layers.assign(m.layers.size(), {});

  Tensor4<T> x = in;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    const ConvLayer<T>& layer = m.layers[l];
    if (cache) cache->layers[l].input = x;
    Tensor4<T> y = conv2d(layer, x, b);
    if (layer.batch_norm) {
      if (cache) {
        cache->layers[l].conv_out = y;
        y = batchnorm_forward(y, layer.bn, mode, &cache->layers[l].bn);
      } else {
        y = batchnorm_forward(y, layer.bn, mode);
      }
    }
    if (layer.relu) relu_inplace(y);
    x = std::move(y);
  }
  if (cache) cache->stack_out = x;

  Tensor4<T> out(in.n, in.c, in.h, in.w);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = in.v[i] - x.v[i];
  return out;
}

template <typename T>
struct ModelGrads {
  std::vector<ConvGrads<T>> conv;  // per layer
  std::vector<BnGrads<T>> bn;      // per layer; empty vectors where BN is off
};

// Gradients of the loss wrt every trainable parameter, given dL/d(out) of
// the residual output. The residual out = in - stack gives dstack = -dout.
template <typename T>
void model_backward(const ModelT<T>& m, const ForwardCache<T>& cache, const Tensor4<T>& dout,
                    ModelGrads<T>& grads, kernels::Backend b = kernels::best_backend()) {
  const size_t L = m.layers.size();
  if (cache.layers.size() != L) throw std::invalid_argument("model_backward: stale cache");
  grads.conv.assign(L, {});
  grads.bn.assign(L, {});

  Tensor4<T> g(dout.n, dout.c, dout.h, dout.w);
  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] = -dout.v[i];

  for (size_t l = L; l-- > 0;) {
    const ConvLayer<T>& layer = m.layers[l];
    if (layer.relu) {
      // The layer's post-ReLU output is the next layer's cached input (the
      // stack output for the top layer, though the top layer has no ReLU).
      const Tensor4<T>& activated = l + 1 < L ? cache.layers[l + 1].input : cache.stack_out;
      g = relu_backward(g, activated);
    }
    if (layer.batch_norm)
      g = batchnorm_backward(g, cache.layers[l].conv_out, layer.bn, cache.layers[l].bn,
                             grads.bn[l]);
    g = conv2d_backward(layer, cache.layers[l].input, g, grads.conv[l], b, l > 0);
  }
}

// Apply the per-batch running-statistics update after a cached training
// forward pass.
template <typename T>
void model_update_running_stats(ModelT<T>& m, const ForwardCache<T>& cache) {
  for (size_t l = 0; l < m.layers.size(); ++l)
    if (m.layers[l].batch_norm) batchnorm_update_running(m.layers[l].bn, cache.layers[l].bn);
}

enum class ParamConvention {
  kernels,             // N_w: convolution weights only (the pruning domain)
  trainable,           // + biases + BN gamma/beta
  with_running_stats,  // + BN running mean/var (checkpoint size)
};

template <typename T>
uint64_t count_params(const ModelT<T>& m, ParamConvention conv) {
  uint64_t kernels = 0, biases = 0, bn_affine = 0, bn_running = 0;
  for (const auto& l : m.layers) {
    kernels += l.kernels.size();
    biases += l.bias.size();
    if (l.batch_norm) {
      bn_affine += 2 * static_cast<uint64_t>(l.bn.channels());
      bn_running += 2 * static_cast<uint64_t>(l.bn.channels());
    }
  }
  switch (conv) {
    case ParamConvention::kernels: return kernels;
    case ParamConvention::trainable: return kernels + biases + bn_affine;
    case ParamConvention::with_running_stats: return kernels + biases + bn_affine + bn_running;
  }
  return 0;
}

template <typename T>
uint64_t count_retained_kernels(const ModelT<T>& m) {
  uint64_t n = 0;
  for (const auto& l : m.layers)
    for (const T& w : l.kernels.v)
      if (w != T(0)) ++n;
  return n;
}

// MAC count of one forward pass over M = rows*cols pixels. With same-size
// zero-padded layers this is exactly M * N_w; a nominal pruning ratio scales
// it by (1 - kappa).
template <typename T>
double flops(const ModelT<T>& m, int antenna_count, double kappa = 0.0) {
  if (kappa < 0.0 || kappa >= 1.0) throw std::invalid_argument("flops: kappa must be in [0, 1)");
  return (1.0 - kappa) * static_cast<double>(antenna_count) *
         static_cast<double>(count_params(m, ParamConvention::kernels));
}

template <typename T>
uint64_t flops_dense(const ModelT<T>& m, int antenna_count) {
  return static_cast<uint64_t>(antenna_count) * count_params(m, ParamConvention::kernels);
}

// MACs actually needed when zeroed weights are skipped.
template <typename T>
uint64_t flops_retained(const ModelT<T>& m, int antenna_count) {
  return static_cast<uint64_t>(antenna_count) * count_retained_kernels(m);
}

// Single-grid convenience wrappers (inference mode, batch of one).
Grid32 forward_grid(const Model& m, const Grid32& ls,
                    kernels::Backend b = kernels::best_backend());
Tensor4f grids_to_batch(const std::vector<const Grid32*>& grids, int rows, int cols);
Grid32 batch_to_grid(const Tensor4f& batch, int sample);

}  // namespace xlc
