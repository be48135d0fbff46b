#include "xlc/kernels.hpp"

#include <stdexcept>

#include "kernels_simd.hpp"
#include "xlc/kernels_ref.hpp"

namespace xlc::kernels {

void ConvShape::validate() const {
  if (n < 1 || h < 1 || w < 1 || cin < 1 || cout < 1)
    throw std::invalid_argument("ConvShape: all extents must be positive");
  if (f < 1 || f % 2 == 0)
    throw std::invalid_argument("ConvShape: kernel side must be odd so padding preserves shape");
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::avx512: return "avx512";
  }
  return "?";
}

bool backend_available(Backend b) {
#if XLC_HAVE_X86_KERNELS
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Backend::avx512: return __builtin_cpu_supports("avx512f");
  }
  return false;
#else
  return b == Backend::scalar;
#endif
}

Backend best_backend() {
  static const Backend picked = [] {
    if (backend_available(Backend::avx512)) return Backend::avx512;
    if (backend_available(Backend::avx2)) return Backend::avx2;
    return Backend::scalar;
  }();
  return picked;
}

namespace {
void require(Backend b) {
  if (!backend_available(b))
    throw std::runtime_error(std::string("conv backend '") + backend_name(b) +
                             "' is not available on this cpu");
}
}  // namespace

void conv2d_forward(const ConvShape& s, const float* in, const float* w, const float* bias,
                    float* out, Backend b) {
  s.validate();
  require(b);
#if XLC_HAVE_X86_KERNELS
  if (b == Backend::avx512) return conv2d_forward_avx512(s, in, w, bias, out);
  if (b == Backend::avx2) return conv2d_forward_avx2(s, in, w, bias, out);
#endif
  conv2d_forward_ref(s, in, w, bias, out);
}

void conv2d_backward_input(const ConvShape& s, const float* gout, const float* w, float* gin,
                           Backend b) {
  s.validate();
  require(b);
#if XLC_HAVE_X86_KERNELS
  if (b == Backend::avx512) return conv2d_backward_input_avx512(s, gout, w, gin);
  if (b == Backend::avx2) return conv2d_backward_input_avx2(s, gout, w, gin);
#endif
  conv2d_backward_input_ref(s, gout, w, gin);
}

void conv2d_backward_weights(const ConvShape& s, const float* in, const float* gout, float* gw,
                             float* gbias, Backend b) {
  s.validate();
  require(b);
#if XLC_HAVE_X86_KERNELS
  if (b == Backend::avx512) return conv2d_backward_weights_avx512(s, in, gout, gw, gbias);
  if (b == Backend::avx2) return conv2d_backward_weights_avx2(s, in, gout, gw, gbias);
#endif
  conv2d_backward_weights_ref(s, in, gout, gw, gbias);
}

}  // namespace xlc::kernels
