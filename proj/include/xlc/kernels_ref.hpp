// Reference convolution kernels: straight nested loops, templated so the
// gradient checker can run them in double precision. Correctness baseline
// for the SIMD backends; not fast.

#pragma once

#include <cstring>

#include "xlc/kernels.hpp"

namespace xlc::kernels {

template <typename T>
void conv2d_forward_ref(const ConvShape& s, const T* in, const T* w, const T* bias, T* out) {
  const int pad = s.pad();
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j) {
        T* op = out + ((static_cast<size_t>(n) * s.h + i) * s.w + j) * s.cout;
        for (int ko = 0; ko < s.cout; ++ko) op[ko] = bias ? bias[ko] : T(0);
        for (int u = 0; u < s.f; ++u) {
          const int y = i + u - pad;
          if (y < 0 || y >= s.h) continue;
          for (int v = 0; v < s.f; ++v) {
            const int x = j + v - pad;
            if (x < 0 || x >= s.w) continue;
            const T* ip = in + ((static_cast<size_t>(n) * s.h + y) * s.w + x) * s.cin;
            for (int ko = 0; ko < s.cout; ++ko) {
              const T* wp = w + ((static_cast<size_t>(ko) * s.f + u) * s.f + v) * s.cin;
              T acc = T(0);
              for (int ci = 0; ci < s.cin; ++ci) acc += wp[ci] * ip[ci];
              op[ko] += acc;
            }
          }
        }
      }
}

template <typename T>
void conv2d_backward_input_ref(const ConvShape& s, const T* gout, const T* w, T* gin) {
  const int pad = s.pad();
  std::memset(gin, 0, s.in_size() * sizeof(T));
  // Scatter form of the adjoint: each output pixel pushes its gradient back
  // through every tap that read a valid input pixel.
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j) {
        const T* gp = gout + ((static_cast<size_t>(n) * s.h + i) * s.w + j) * s.cout;
        for (int u = 0; u < s.f; ++u) {
          const int y = i + u - pad;
          if (y < 0 || y >= s.h) continue;
          for (int v = 0; v < s.f; ++v) {
            const int x = j + v - pad;
            if (x < 0 || x >= s.w) continue;
            T* ip = gin + ((static_cast<size_t>(n) * s.h + y) * s.w + x) * s.cin;
            for (int ko = 0; ko < s.cout; ++ko) {
              const T* wp = w + ((static_cast<size_t>(ko) * s.f + u) * s.f + v) * s.cin;
              const T g = gp[ko];
              for (int ci = 0; ci < s.cin; ++ci) ip[ci] += g * wp[ci];
            }
          }
        }
      }
}

template <typename T>
void conv2d_backward_weights_ref(const ConvShape& s, const T* in, const T* gout, T* gw, T* gbias) {
  const int pad = s.pad();
  std::memset(gw, 0, s.weight_size() * sizeof(T));
  if (gbias) std::memset(gbias, 0, static_cast<size_t>(s.cout) * sizeof(T));
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j) {
        const T* gp = gout + ((static_cast<size_t>(n) * s.h + i) * s.w + j) * s.cout;
        if (gbias)
          for (int ko = 0; ko < s.cout; ++ko) gbias[ko] += gp[ko];
        for (int u = 0; u < s.f; ++u) {
          const int y = i + u - pad;
          if (y < 0 || y >= s.h) continue;
          for (int v = 0; v < s.f; ++v) {
            const int x = j + v - pad;
            if (x < 0 || x >= s.w) continue;
            const T* ip = in + ((static_cast<size_t>(n) * s.h + y) * s.w + x) * s.cin;
            for (int ko = 0; ko < s.cout; ++ko) {
              T* wp = gw + ((static_cast<size_t>(ko) * s.f + u) * s.f + v) * s.cin;
              const T g = gp[ko];
              for (int ci = 0; ci < s.cin; ++ci) wp[ci] += g * ip[ci];
            }
          }
        }
      }
}

}  // namespace xlc::kernels
