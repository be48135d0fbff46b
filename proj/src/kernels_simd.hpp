// Internal entry points for the architecture-specific translation units.
// Only kernels.cpp should include this; callers go through the dispatchers
// in xlc/kernels.hpp.

#pragma once

#include "xlc/kernels.hpp"

namespace xlc::kernels {

#if defined(__x86_64__) || defined(_M_X64)
#define XLC_HAVE_X86_KERNELS 1

void conv2d_forward_avx2(const ConvShape& s, const float* in, const float* w, const float* bias,
                         float* out);
void conv2d_backward_input_avx2(const ConvShape& s, const float* gout, const float* w, float* gin);
void conv2d_backward_weights_avx2(const ConvShape& s, const float* in, const float* gout,
                                  float* gw, float* gbias);

void conv2d_forward_avx512(const ConvShape& s, const float* in, const float* w, const float* bias,
                           float* out);
void conv2d_backward_input_avx512(const ConvShape& s, const float* gout, const float* w,
                                  float* gin);
void conv2d_backward_weights_avx512(const ConvShape& s, const float* in, const float* gout,
                                    float* gw, float* gbias);
#else
#define XLC_HAVE_X86_KERNELS 0
#endif

}  // namespace xlc::kernels
