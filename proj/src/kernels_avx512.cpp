// AVX-512 convolution backend. Translation unit is compiled with -mavx512f;
// nothing here may be called unless backend_available(Backend::avx512).
//
// Forward and backward-input share one core: both are correlations of an
// NHWC activation with per-slab repacked weights, output channels in the
// SIMD lanes. Weights are repacked so each (tap, in-channel) row is a
// contiguous run of padded output-channel lanes; border taps read from a
// zero vector instead of branching inside the hot loop.

#include "kernels_simd.hpp"

#if XLC_HAVE_X86_KERNELS

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace xlc::kernels {
namespace {

struct SlabArgs {
  const float* in;
  const float* wp;    // slab weights: wp[((u*F + v)*CIN + ci)*(16*KT) + lane]
  const float* bias;  // padded to 16*KT
  float* out;
  const float* zerov;  // at least CIN zeros
  int n, h, w, cin, cout, f, pad;
  int c0;          // first output channel of this slab
  __mmask16 tail;  // valid lanes of the last 16-group
};

template <int PB, int KT>
void conv_slab_block(const SlabArgs& a, int n, int i, int j0) {
  __m512 acc[PB][KT];
  for (int b = 0; b < PB; ++b)
    for (int k = 0; k < KT; ++k) acc[b][k] = _mm512_loadu_ps(a.bias + 16 * k);

  for (int u = 0; u < a.f; ++u) {
    const int y = i + u - a.pad;
    const bool rowok = y >= 0 && y < a.h;
    const float* rowbase =
        a.in + (static_cast<size_t>(n) * a.h + (rowok ? y : 0)) * a.w * a.cin;
    for (int v = 0; v < a.f; ++v) {
      const float* src[PB];
      for (int b = 0; b < PB; ++b) {
        const int x = j0 + b + v - a.pad;
        src[b] = (rowok && x >= 0 && x < a.w) ? rowbase + static_cast<size_t>(x) * a.cin : a.zerov;
      }
      const float* wrow = a.wp + (static_cast<size_t>(u) * a.f + v) * a.cin * (16 * KT);
      for (int ci = 0; ci < a.cin; ++ci) {
        __m512 wv[KT];
        for (int k = 0; k < KT; ++k)
          wv[k] = _mm512_loadu_ps(wrow + static_cast<size_t>(ci) * (16 * KT) + 16 * k);
        for (int b = 0; b < PB; ++b) {
          const __m512 iv = _mm512_set1_ps(src[b][ci]);
          for (int k = 0; k < KT; ++k) acc[b][k] = _mm512_fmadd_ps(iv, wv[k], acc[b][k]);
        }
      }
    }
  }
  for (int b = 0; b < PB; ++b) {
    float* op =
        a.out + ((static_cast<size_t>(n) * a.h + i) * a.w + (j0 + b)) * a.cout + a.c0;
    for (int k = 0; k < KT; ++k) {
      if (k == KT - 1)
        _mm512_mask_storeu_ps(op + 16 * k, a.tail, acc[b][k]);
      else
        _mm512_storeu_ps(op + 16 * k, acc[b][k]);
    }
  }
}

template <int KT>
void conv_slab(const SlabArgs& a) {
  for (int n = 0; n < a.n; ++n)
    for (int i = 0; i < a.h; ++i) {
      int j0 = 0;
      for (; j0 + 4 <= a.w; j0 += 4) conv_slab_block<4, KT>(a, n, i, j0);
      for (; j0 < a.w; ++j0) conv_slab_block<1, KT>(a, n, i, j0);
    }
}

// Correlation driver shared by forward and backward-input. `rep(u, v, ci, ko)`
// supplies the weight for tap (u, v), input channel ci, output channel ko in
// whatever order the caller's canonical weights require.
template <typename Repack>
void run_conv(int N, int H, int W, int CIN, int COUT, int F, const float* in, const float* bias,
              float* out, Repack rep) {
  const int pad = (F - 1) / 2;
  std::vector<float> zerov(static_cast<size_t>(CIN), 0.0f);
  for (int c0 = 0; c0 < COUT; c0 += 64) {
    const int sc = std::min(64, COUT - c0);
    const int kt = (sc + 15) / 16;
    const int scp = kt * 16;
    std::vector<float> wp(static_cast<size_t>(F) * F * CIN * scp, 0.0f);
    for (int u = 0; u < F; ++u)
      for (int v = 0; v < F; ++v)
        for (int ci = 0; ci < CIN; ++ci) {
          float* dst = wp.data() + ((static_cast<size_t>(u) * F + v) * CIN + ci) * scp;
          for (int k = 0; k < sc; ++k) dst[k] = rep(u, v, ci, c0 + k);
        }
    std::vector<float> biasp(static_cast<size_t>(scp), 0.0f);
    if (bias)
      for (int k = 0; k < sc; ++k) biasp[static_cast<size_t>(k)] = bias[c0 + k];

    SlabArgs a;
    a.in = in;
    a.wp = wp.data();
    a.bias = biasp.data();
    a.out = out;
    a.zerov = zerov.data();
    a.n = N, a.h = H, a.w = W, a.cin = CIN, a.cout = COUT, a.f = F, a.pad = pad;
    a.c0 = c0;
    const int rem = sc % 16;
    a.tail = rem ? static_cast<__mmask16>((1u << rem) - 1u) : static_cast<__mmask16>(0xFFFFu);
    switch (kt) {
      case 1: conv_slab<1>(a); break;
      case 2: conv_slab<2>(a); break;
      case 3: conv_slab<3>(a); break;
      default: conv_slab<4>(a); break;
    }
  }
}

inline __mmask16 lane_mask16(int count) {
  if (count <= 0) return 0;
  if (count >= 16) return 0xFFFFu;
  return static_cast<__mmask16>((1u << count) - 1u);
}

// One (ko tile, ci block) of the weight gradient for tap (u, v), accumulated
// in registers over a row chunk and then added into gw.
template <int RT>
void gw_tile(const ConvShape& s, const float* in, const float* gout, float* gw, int u, int v,
             int ko0, int ci0, int r0, int r1, __mmask16 m0, __mmask16 m1) {
  const int pad = s.pad();
  __m512 acc[RT][2];
  for (int t = 0; t < RT; ++t) acc[t][0] = acc[t][1] = _mm512_setzero_ps();

  const int jlo = std::max(0, pad - v);
  const int jhi = std::min(s.w, s.w + pad - v);
  for (int r = r0; r < r1; ++r) {
    const int i = r % s.h;
    const int y = i + u - pad;
    if (y < 0 || y >= s.h) continue;
    const int n = r / s.h;
    const float* inrow = in + (static_cast<size_t>(n) * s.h + y) * s.w * s.cin;
    const float* gorow = gout + static_cast<size_t>(r) * s.w * s.cout;
    for (int j = jlo; j < jhi; ++j) {
      const int x = j + v - pad;
      const float* ip = inrow + static_cast<size_t>(x) * s.cin + ci0;
      const float* gp = gorow + static_cast<size_t>(j) * s.cout + ko0;
      const __m512 i0 = _mm512_maskz_loadu_ps(m0, ip);
      const __m512 i1 = _mm512_maskz_loadu_ps(m1, ip + 16);
      for (int t = 0; t < RT; ++t) {
        const __m512 g = _mm512_set1_ps(gp[t]);
        acc[t][0] = _mm512_fmadd_ps(g, i0, acc[t][0]);
        acc[t][1] = _mm512_fmadd_ps(g, i1, acc[t][1]);
      }
    }
  }
  for (int t = 0; t < RT; ++t) {
    float* dst = gw + ((static_cast<size_t>(ko0 + t) * s.f + u) * s.f + v) * s.cin + ci0;
    _mm512_mask_storeu_ps(dst, m0, _mm512_add_ps(_mm512_maskz_loadu_ps(m0, dst), acc[t][0]));
    _mm512_mask_storeu_ps(dst + 16, m1,
                          _mm512_add_ps(_mm512_maskz_loadu_ps(m1, dst + 16), acc[t][1]));
  }
}

}  // namespace

void conv2d_forward_avx512(const ConvShape& s, const float* in, const float* w, const float* bias,
                           float* out) {
  run_conv(s.n, s.h, s.w, s.cin, s.cout, s.f, in, bias, out,
           [&](int u, int v, int ci, int ko) {
             return w[((static_cast<size_t>(ko) * s.f + u) * s.f + v) * s.cin + ci];
           });
}

void conv2d_backward_input_avx512(const ConvShape& s, const float* gout, const float* w,
                                  float* gin) {
  // gin is a correlation of gout with taps flipped and channel roles swapped.
  run_conv(s.n, s.h, s.w, s.cout, s.cin, s.f, gout, nullptr, gin,
           [&](int u, int v, int q, int p) {
             return w[((static_cast<size_t>(q) * s.f + (s.f - 1 - u)) * s.f + (s.f - 1 - v)) *
                          s.cin +
                      p];
           });
}

void conv2d_backward_weights_avx512(const ConvShape& s, const float* in, const float* gout,
                                    float* gw, float* gbias) {
  std::memset(gw, 0, s.weight_size() * sizeof(float));

  if (gbias) {
    std::memset(gbias, 0, static_cast<size_t>(s.cout) * sizeof(float));
    const size_t pixels = static_cast<size_t>(s.n) * s.h * s.w;
    for (int c0 = 0; c0 < s.cout; c0 += 64) {
      const int sc = std::min(64, s.cout - c0);
      const int kt = (sc + 15) / 16;
      __m512 acc[4] = {_mm512_setzero_ps(), _mm512_setzero_ps(), _mm512_setzero_ps(),
                       _mm512_setzero_ps()};
      __mmask16 m[4];
      for (int k = 0; k < kt; ++k) m[k] = lane_mask16(sc - 16 * k);
      for (size_t p = 0; p < pixels; ++p) {
        const float* gp = gout + p * s.cout + c0;
        for (int k = 0; k < kt; ++k)
          acc[k] = _mm512_add_ps(acc[k], _mm512_maskz_loadu_ps(m[k], gp + 16 * k));
      }
      for (int k = 0; k < kt; ++k) _mm512_mask_storeu_ps(gbias + c0 + 16 * k, m[k], acc[k]);
    }
  }

  // Row chunks keep one slab of `in` and `gout` cache-resident while every
  // (tap, tile) pass re-reads it.
  const int rows_total = s.n * s.h;
  const int rows_per_chunk = std::max(1, 1024 / std::max(1, s.w));
  for (int r0 = 0; r0 < rows_total; r0 += rows_per_chunk) {
    const int r1 = std::min(rows_total, r0 + rows_per_chunk);
    for (int u = 0; u < s.f; ++u)
      for (int v = 0; v < s.f; ++v)
        for (int ko0 = 0; ko0 < s.cout; ko0 += 4) {
          const int rt = std::min(4, s.cout - ko0);
          for (int ci0 = 0; ci0 < s.cin; ci0 += 32) {
            const int cm = std::min(32, s.cin - ci0);
            const __mmask16 m0 = lane_mask16(cm);
            const __mmask16 m1 = lane_mask16(cm - 16);
            switch (rt) {
              case 1: gw_tile<1>(s, in, gout, gw, u, v, ko0, ci0, r0, r1, m0, m1); break;
              case 2: gw_tile<2>(s, in, gout, gw, u, v, ko0, ci0, r0, r1, m0, m1); break;
              case 3: gw_tile<3>(s, in, gout, gw, u, v, ko0, ci0, r0, r1, m0, m1); break;
              default: gw_tile<4>(s, in, gout, gw, u, v, ko0, ci0, r0, r1, m0, m1); break;
            }
          }
        }
  }
}

}  // namespace xlc::kernels

#endif  // XLC_HAVE_X86_KERNELS
