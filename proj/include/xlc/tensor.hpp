// Dense rank-4 tensor indexed (batch, channel, row, col).
//
// Storage is channels-innermost ("NHWC"): element (n, c, i, j) lives at
// ((n*H + i)*W + j)*C + c. That keeps all channels of one pixel contiguous,
// which is the layout the convolution kernels vectorize over. Code that
// walks raw data() must respect this order; everything else should go
// through at().

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace xlc {

template <typename T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor4() = default;

  Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0)
      throw std::invalid_argument("Tensor4: all dims must be positive");
    v.assign(static_cast<size_t>(n_) * c_ * h_ * w_, T(0));
  }

  size_t size() const { return v.size(); }
  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

  size_t index(int in, int ic, int ii, int ij) const {
    return ((static_cast<size_t>(in) * h + ii) * w + ij) * c + ic;
  }

  T& at(int in, int ic, int ii, int ij) { return v[index(in, ic, ii, ij)]; }
  const T& at(int in, int ic, int ii, int ij) const { return v[index(in, ic, ii, ij)]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }
};

using Tensor4f = Tensor4<float>;
using Tensor4d = Tensor4<double>;

template <typename To, typename From>
Tensor4<To> tensor_cast(const Tensor4<From>& a) {
  Tensor4<To> out(a.n, a.c, a.h, a.w);
  for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = static_cast<To>(a.v[i]);
  return out;
}

}  // namespace xlc
