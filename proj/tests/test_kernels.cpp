// Convolution kernel tests against an independent reference: the direct
// convolution below is written from the layout contract in kernels.hpp (NHWC
// activations, (out, tap_row, tap_col, in) weights, stride 1, zero padding)
// with double accumulation, sharing no code with the library. Backward ops
// are validated through the adjoint identities of the linear maps, and every
// available SIMD backend is held to the same reference.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "xlc/kernels.hpp"
#include "xlc/rng.hpp"

using namespace xlc;
using kernels::Backend;
using kernels::ConvShape;

namespace {

// out[n,i,j,ko] = bias[ko] + sum_{u,v,ci} w[ko,u,v,ci] * in[n,i+u-pad,j+v-pad,ci]
std::vector<double> reference_forward(const ConvShape& s, const std::vector<float>& in,
                                      const std::vector<float>& w, const std::vector<float>& bias) {
  const int pad = (s.f - 1) / 2;
  std::vector<double> out(s.out_size(), 0.0);
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j)
        for (int ko = 0; ko < s.cout; ++ko) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[static_cast<size_t>(ko)]);
          for (int u = 0; u < s.f; ++u) {
            const int src_i = i + u - pad;
            if (src_i < 0 || src_i >= s.h) continue;
            for (int v = 0; v < s.f; ++v) {
              const int src_j = j + v - pad;
              if (src_j < 0 || src_j >= s.w) continue;
              for (int ci = 0; ci < s.cin; ++ci) {
                const size_t wi = ((static_cast<size_t>(ko) * s.f + u) * s.f + v) * s.cin + ci;
                const size_t xi = ((static_cast<size_t>(n) * s.h + src_i) * s.w + src_j) * s.cin + ci;
                acc += static_cast<double>(w[wi]) * static_cast<double>(in[xi]);
              }
            }
          }
          out[((static_cast<size_t>(n) * s.h + i) * s.w + j) * s.cout + ko] = acc;
        }
  return out;
}

std::vector<float> random_vec(size_t n, Pcg32& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// Accumulation-length-aware tolerance: float chains of up to f*f*cin terms of
// unit-scale values keep realistic rounding well under this, while an
// off-by-one tap or index bug shifts values by O(0.1).
double conv_tol(const ConvShape& s) { return 1e-4 * std::sqrt(static_cast<double>(s.f) * s.f * s.cin); }

const ConvShape kShapes[] = {
    // n, h, w, cin, cout, f — chosen to hit channel and width tails:
    // cin/cout not multiples of the SIMD lane counts (8, 16), f in {1,3,5},
    // and spatial extents both smaller and larger than one vector register.
    {1, 5, 5, 1, 1, 3},   {2, 7, 5, 3, 8, 3},   {1, 6, 6, 16, 16, 3}, {1, 4, 9, 33, 7, 3},
    {2, 3, 3, 2, 65, 3},  {1, 8, 8, 64, 2, 3},  {1, 5, 7, 5, 5, 1},   {1, 7, 7, 4, 6, 5},
    {2, 16, 16, 2, 8, 3}, {1, 13, 13, 17, 9, 3},
};

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (kernels::backend_available(Backend::avx2)) out.push_back(Backend::avx2);
  if (kernels::backend_available(Backend::avx512)) out.push_back(Backend::avx512);
  return out;
}

}  // namespace

TEST_CASE("forward convolution matches the independent double reference") {
  int shape_idx = 0;
  for (const ConvShape& s : kShapes) {
    Pcg32 rng = make_stream(100, stream_domain::init, static_cast<uint64_t>(shape_idx++));
    auto in = random_vec(s.in_size(), rng);
    auto w = random_vec(s.weight_size(), rng);
    auto bias = random_vec(static_cast<size_t>(s.cout), rng);
    auto ref = reference_forward(s, in, w, bias);
    const double tol = conv_tol(s);
    for (Backend b : available_backends()) {
      CAPTURE(shape_idx);
      CAPTURE(kernels::backend_name(b));
      std::vector<float> out(s.out_size(), -777.0f);
      kernels::conv2d_forward(s, in.data(), w.data(), bias.data(), out.data(), b);
      double worst = 0.0;
      for (size_t i = 0; i < out.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(out[i]) - ref[i]));
      CHECK(worst < tol);
    }
  }
}

TEST_CASE("null bias is treated as zero") {
  const ConvShape s{1, 5, 5, 3, 4, 3};
  Pcg32 rng = make_stream(101, stream_domain::init, 0);
  auto in = random_vec(s.in_size(), rng);
  auto w = random_vec(s.weight_size(), rng);
  auto ref = reference_forward(s, in, w, {});
  for (Backend b : available_backends()) {
    std::vector<float> out(s.out_size());
    kernels::conv2d_forward(s, in.data(), w.data(), nullptr, out.data(), b);
    for (size_t i = 0; i < out.size(); ++i)
      CHECK(std::abs(static_cast<double>(out[i]) - ref[i]) < conv_tol(s));
  }
}

TEST_CASE("backward_input is the adjoint of zero-bias forward") {
  // For the linear map A(in) = conv(in; w), <A in, g> = <in, A^T g> must hold
  // up to float rounding; backward_input computes A^T g.
  int shape_idx = 0;
  for (const ConvShape& s : kShapes) {
    Pcg32 rng = make_stream(102, stream_domain::init, static_cast<uint64_t>(shape_idx++));
    auto in = random_vec(s.in_size(), rng);
    auto w = random_vec(s.weight_size(), rng);
    auto g = random_vec(s.out_size(), rng);
    for (Backend b : available_backends()) {
      CAPTURE(shape_idx);
      CAPTURE(kernels::backend_name(b));
      std::vector<float> out(s.out_size());
      kernels::conv2d_forward(s, in.data(), w.data(), nullptr, out.data(), b);
      std::vector<float> gin(s.in_size(), -777.0f);
      kernels::conv2d_backward_input(s, g.data(), w.data(), gin.data(), b);
      const double lhs = dot(out, g);
      const double rhs = dot(in, gin);
      CHECK(std::abs(lhs - rhs) < 1e-3 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));
    }
  }
}

TEST_CASE("backward_weights is the adjoint in the weight argument") {
  // With in fixed, B(w) = conv(in; w) is linear in w: <B w, g> = <w, B^T g>,
  // and B^T g is exactly the weight gradient.
  int shape_idx = 0;
  for (const ConvShape& s : kShapes) {
    Pcg32 rng = make_stream(103, stream_domain::init, static_cast<uint64_t>(shape_idx++));
    auto in = random_vec(s.in_size(), rng);
    auto w = random_vec(s.weight_size(), rng);
    auto g = random_vec(s.out_size(), rng);
    for (Backend b : available_backends()) {
      CAPTURE(shape_idx);
      CAPTURE(kernels::backend_name(b));
      std::vector<float> out(s.out_size());
      kernels::conv2d_forward(s, in.data(), w.data(), nullptr, out.data(), b);
      std::vector<float> gw(s.weight_size(), -777.0f);
      std::vector<float> gbias(static_cast<size_t>(s.cout), -777.0f);
      kernels::conv2d_backward_weights(s, in.data(), g.data(), gw.data(), gbias.data(), b);
      const double lhs = dot(out, g);
      const double rhs = dot(w, gw);
      CHECK(std::abs(lhs - rhs) < 1e-3 * std::max({1.0, std::abs(lhs), std::abs(rhs)}));

      // gbias[ko] = sum of gout over batch and pixels for that channel.
      for (int ko = 0; ko < s.cout; ++ko) {
        double want = 0.0;
        for (size_t px = 0; px < s.out_size() / s.cout; ++px)
          want += static_cast<double>(g[px * s.cout + ko]);
        CHECK(std::abs(static_cast<double>(gbias[static_cast<size_t>(ko)]) - want) <
              1e-4 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST_CASE("backward_weights tolerates a null gbias") {
  const ConvShape s{1, 4, 4, 3, 5, 3};
  Pcg32 rng = make_stream(104, stream_domain::init, 0);
  auto in = random_vec(s.in_size(), rng);
  auto g = random_vec(s.out_size(), rng);
  for (Backend b : available_backends()) {
    std::vector<float> gw(s.weight_size());
    CHECK_NOTHROW(kernels::conv2d_backward_weights(s, in.data(), g.data(), gw.data(), nullptr, b));
  }
}

TEST_CASE("SIMD backends agree with the scalar reference on all ops") {
  auto backends = available_backends();
  if (backends.size() == 1) return;  // scalar-only machine: nothing to compare
  int shape_idx = 0;
  for (const ConvShape& s : kShapes) {
    Pcg32 rng = make_stream(105, stream_domain::init, static_cast<uint64_t>(shape_idx++));
    auto in = random_vec(s.in_size(), rng);
    auto w = random_vec(s.weight_size(), rng);
    auto bias = random_vec(static_cast<size_t>(s.cout), rng);
    auto g = random_vec(s.out_size(), rng);
    const double tol = conv_tol(s);

    std::vector<float> out_ref(s.out_size()), gin_ref(s.in_size());
    std::vector<float> gw_ref(s.weight_size()), gb_ref(static_cast<size_t>(s.cout));
    kernels::conv2d_forward(s, in.data(), w.data(), bias.data(), out_ref.data(), Backend::scalar);
    kernels::conv2d_backward_input(s, g.data(), w.data(), gin_ref.data(), Backend::scalar);
    kernels::conv2d_backward_weights(s, in.data(), g.data(), gw_ref.data(), gb_ref.data(),
                                     Backend::scalar);

    for (size_t bi = 1; bi < backends.size(); ++bi) {
      Backend b = backends[bi];
      CAPTURE(shape_idx);
      CAPTURE(kernels::backend_name(b));
      std::vector<float> out(s.out_size()), gin(s.in_size());
      std::vector<float> gw(s.weight_size()), gb(static_cast<size_t>(s.cout));
      kernels::conv2d_forward(s, in.data(), w.data(), bias.data(), out.data(), b);
      kernels::conv2d_backward_input(s, g.data(), w.data(), gin.data(), b);
      kernels::conv2d_backward_weights(s, in.data(), g.data(), gw.data(), gb.data(), b);
      auto worst = [](const std::vector<float>& a, const std::vector<float>& c) {
        double m = 0.0;
        for (size_t i = 0; i < a.size(); ++i)
          m = std::max(m, std::abs(static_cast<double>(a[i]) - c[i]));
        return m;
      };
      CHECK(worst(out, out_ref) < tol);
      CHECK(worst(gin, gin_ref) < 1e-4 * std::sqrt(static_cast<double>(s.f) * s.f * s.cout));
      CHECK(worst(gw, gw_ref) < 1e-4 * std::sqrt(static_cast<double>(s.n) * s.h * s.w));
      CHECK(worst(gb, gb_ref) < 1e-4 * std::sqrt(static_cast<double>(s.n) * s.h * s.w));
    }
  }
}

TEST_CASE("shape validation rejects bad extents") {
  ConvShape s{1, 4, 4, 3, 5, 3};
  CHECK_NOTHROW(s.validate());
  s.f = 2;  // even kernels cannot preserve shape with symmetric padding
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {0, 4, 4, 3, 5, 3};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {1, 4, 4, 0, 5, 3};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("dispatch names, availability, and unavailable-backend errors") {
  CHECK(std::string(kernels::backend_name(Backend::scalar)) == "scalar");
  CHECK(std::string(kernels::backend_name(Backend::avx2)) == "avx2");
  CHECK(std::string(kernels::backend_name(Backend::avx512)) == "avx512");
  CHECK(kernels::backend_available(Backend::scalar));
  CHECK(kernels::backend_available(kernels::best_backend()));

  const ConvShape s{1, 3, 3, 1, 1, 3};
  std::vector<float> in(s.in_size()), w(s.weight_size()), out(s.out_size());
  for (Backend b : {Backend::avx2, Backend::avx512}) {
    if (kernels::backend_available(b)) continue;
    CHECK_THROWS_AS(kernels::conv2d_forward(s, in.data(), w.data(), nullptr, out.data(), b),
                    std::runtime_error);
  }
}
