// Low-level convolution kernels with runtime-dispatched SIMD backends.
//
// Contract shared by every backend:
//   * activations are NHWC: act[((n*H + i)*W + j)*C + c]
//   * weights are canonical (out_ch, tap_row, tap_col, in_ch):
//     w[((ko*F + u)*F + v)*Cin + ci]
//   * stride 1, zero padding (F-1)/2, so spatial dims are preserved
// Backends may reorder floating-point accumulation, so cross-backend results
// agree to rounding, not bit-exactly. The scalar backend is the reference.

#pragma once

#include <cstddef>
#include <string>

namespace xlc::kernels {

struct ConvShape {
  int n = 0, h = 0, w = 0;  // batch and spatial extents
  int cin = 0, cout = 0;    // channel counts
  int f = 0;                // odd kernel side

  void validate() const;
  int pad() const { return (f - 1) / 2; }
  size_t in_size() const { return static_cast<size_t>(n) * h * w * cin; }
  size_t out_size() const { return static_cast<size_t>(n) * h * w * cout; }
  size_t weight_size() const { return static_cast<size_t>(cout) * cin * f * f; }
};

enum class Backend { scalar, avx2, avx512 };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend best_backend();  // fastest available on this machine

// out[n,i,j,ko] = bias[ko] + sum_{u,v,ci} w[ko,u,v,ci] * in[n,i+u-pad,j+v-pad,ci]
// bias may be null (treated as zero).
void conv2d_forward(const ConvShape& s, const float* in, const float* w, const float* bias,
                    float* out, Backend b);

// gin = correlation of gout with the tap-flipped, channel-transposed weights.
void conv2d_backward_input(const ConvShape& s, const float* gout, const float* w, float* gin,
                           Backend b);

// gw[ko,u,v,ci] = sum over pixels of gout * shifted in; gbias[ko] = sum gout.
// gbias may be null to skip the bias reduction.
void conv2d_backward_weights(const ConvShape& s, const float* in, const float* gout, float* gw,
                             float* gbias, Backend b);

}  // namespace xlc::kernels
