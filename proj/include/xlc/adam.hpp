// Adam optimizer over a list of parameter spans, with an optional binary
// mask per span that freezes individual entries (used to keep pruned weights
// at exactly zero during fine-tuning).

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace xlc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;
  std::vector<std::vector<T>> m, v;  // first/second moments, one slot per span

  void init(const std::vector<size_t>& sizes) {
    step = 0;
    m.clear();
    v.clear();
    for (size_t s : sizes) {
      m.emplace_back(s, T(0));
      v.emplace_back(s, T(0));
    }
  }
};

// One optimizer step over all spans. masks may be empty, or hold one pointer
// per span (null = dense). A masked-out entry is skipped entirely: parameter
// and moments stay untouched, so a zeroed weight stays exactly zero.
template <typename T>
void adam_step(AdamState<T>& st, const std::vector<std::span<T>>& params,
               const std::vector<std::span<const T>>& grads,
               const std::vector<const uint8_t*>& masks = {}) {
  if (params.size() != st.m.size() || grads.size() != st.m.size())
    throw std::invalid_argument("adam_step: span count does not match state");
  if (!masks.empty() && masks.size() != params.size())
    throw std::invalid_argument("adam_step: mask count does not match state");

  const double t = static_cast<double>(++st.step);
  const double bc1 = 1.0 - std::pow(st.cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(st.cfg.beta2, t);

  for (size_t slot = 0; slot < params.size(); ++slot) {
    auto p = params[slot];
    auto g = grads[slot];
    if (p.size() != st.m[slot].size() || g.size() != p.size())
      throw std::invalid_argument("adam_step: span size does not match state");
    const uint8_t* mask = masks.empty() ? nullptr : masks[slot];
    T* mm = st.m[slot].data();
    T* vv = st.v[slot].data();
    for (size_t i = 0; i < p.size(); ++i) {
      if (mask && !mask[i]) continue;
      const double gi = static_cast<double>(g[i]);
      const double mi = st.cfg.beta1 * mm[i] + (1.0 - st.cfg.beta1) * gi;
      const double vi = st.cfg.beta2 * vv[i] + (1.0 - st.cfg.beta2) * gi * gi;
      mm[i] = static_cast<T>(mi);
      vv[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      p[i] -= static_cast<T>(st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps));
    }
  }
}

}  // namespace xlc
