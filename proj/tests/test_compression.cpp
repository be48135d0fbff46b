// Pruning and quantization tests built on hand-computed oracles: threshold
// ranks and zeroed counts worked out on paper, a fully hand-quantized
// four-weight layer (S = 0.7/3, Z = 1, codes 1/0/3), LSB-first bit packing
// verified byte by byte, and the published compression-ratio arithmetic.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "xlc/compress.hpp"
#include "xlc/model.hpp"
#include "xlc/train.hpp"

using namespace xlc;

namespace {

// A two-layer shell whose kernel values the tests set directly.
Model tiny_model(const std::vector<float>& w0, const std::vector<float>& w1) {
  Model m;
  m.rows = 2;
  m.cols = 2;
  ConvLayer<float> a;
  a.kernels = Tensor4f(1, 1, 2, 2);  // 4 weights (shape is irrelevant here)
  REQUIRE(w0.size() == 4);
  a.kernels.v = w0;
  a.bias.assign(1, 0.0f);
  ConvLayer<float> b;
  b.kernels = Tensor4f(2, 1, 1, 1);  // 2 weights
  REQUIRE(w1.size() == 2);
  b.kernels.v = w1;
  b.bias.assign(2, 0.0f);
  m.layers.push_back(std::move(a));
  m.layers.push_back(std::move(b));
  return m;
}

}  // namespace

TEST_CASE("threshold is the floor(kappa*N)-th smallest magnitude") {
  Model m = tiny_model({0.5f, -0.1f, 0.3f, -0.7f}, {0.2f, 0.9f});
  // Magnitudes sorted: 0.1 0.2 0.3 0.5 0.7 0.9; kappa=0.5 -> rank 3 -> 0.3.
  CHECK(compute_threshold(m, 0.5) == 0.3f);
  // kappa=0.34 -> rank floor(2.04)=2 -> 0.2.
  CHECK(compute_threshold(m, 0.34) == 0.2f);
  CHECK_THROWS_AS(compute_threshold(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_threshold(m, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_threshold(m, 0.1), std::invalid_argument);  // rank 0
}

TEST_CASE("prune zeroes exactly floor(kappa*N)-1 weights when magnitudes are distinct") {
  Model m = tiny_model({0.5f, -0.1f, 0.3f, -0.7f}, {0.2f, 0.9f});
  PruneMask mask = prune(m, 0.5);
  CHECK(mask.total == 6);
  CHECK(mask.retained == 4);  // zeroed = floor(0.5*6) - 1 = 2
  CHECK(m.layers[0].kernels.v == std::vector<float>{0.5f, 0.0f, 0.3f, -0.7f});
  CHECK(m.layers[1].kernels.v == std::vector<float>{0.0f, 0.9f});
  CHECK(mask.layers[0] == std::vector<uint8_t>{1, 0, 1, 1});
  CHECK(mask.layers[1] == std::vector<uint8_t>{0, 1});
}

TEST_CASE("prune keeps every weight tied at the threshold") {
  Model m = tiny_model({0.3f, -0.3f, 0.1f, 0.5f}, {0.3f, 0.8f});
  // Sorted magnitudes: 0.1 0.3 0.3 0.3 0.5 0.8; kappa=0.5 -> theta = 0.3.
  PruneMask mask = prune(m, 0.5);
  CHECK(mask.retained == 5);  // only 0.1 falls strictly below the threshold
  CHECK(m.layers[0].kernels.v[2] == 0.0f);
  CHECK(m.layers[0].kernels.v[0] == 0.3f);
  CHECK(m.layers[0].kernels.v[1] == -0.3f);
}

TEST_CASE("full_mask and mask_from_nonzero") {
  Model m = tiny_model({0.5f, 0.0f, 0.3f, 0.0f}, {0.0f, 0.9f});
  PruneMask full = full_mask(m);
  CHECK(full.total == 6);
  CHECK(full.retained == 6);

  PruneMask nz = mask_from_nonzero(m);
  CHECK(nz.total == 6);
  CHECK(nz.retained == 3);
  CHECK(nz.layers[0] == std::vector<uint8_t>{1, 0, 1, 0});
  CHECK(nz.layers[1] == std::vector<uint8_t>{0, 1});
}

TEST_CASE("bit packing is LSB-first within and across bytes") {
  // codes [1,2,3] at 3 bits: stream 1,0,0 | 0,1,0 | 1,1,0 -> byte 0 = 0xD1.
  std::vector<uint8_t> packed = pack_codes({1, 2, 3}, 3);
  CHECK(packed == std::vector<uint8_t>{209, 0});
  CHECK(unpack_codes(packed, 3, 3) == std::vector<uint64_t>{1, 2, 3});

  CHECK(pack_codes({1, 0, 3}, 2) == std::vector<uint8_t>{49});

  CHECK_THROWS_AS(pack_codes({1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(pack_codes({1}, 33), std::invalid_argument);
  CHECK_THROWS_AS(unpack_codes(packed, 3, 10), std::invalid_argument);  // buffer too short
}

TEST_CASE("bit packing round-trips at every width") {
  Pcg32 rng = make_stream(60, stream_domain::init, 0);
  for (int bits : {1, 2, 3, 5, 8, 13, 16, 32}) {
    const uint64_t mask = bits == 64 ? ~0ull : ((1ull << bits) - 1);
    std::vector<uint64_t> codes(97);
    for (auto& c : codes) c = rng.next_u64() & mask;
    auto bytes = pack_codes(codes, bits);
    CHECK(bytes.size() == (codes.size() * static_cast<size_t>(bits) + 7) / 8);
    CHECK(unpack_codes(bytes, bits, codes.size()) == codes);
  }
}

TEST_CASE("quantize_layer reproduces the hand-worked example") {
  Tensor4f k(1, 1, 2, 2);
  k.v = {0.1f, -0.2f, 0.5f, 0.0f};
  std::vector<uint8_t> mask = {1, 1, 1, 0};
  QuantizedLayer q = quantize_layer(k, mask, 2);

  // lo = -0.2, hi = 0.5: S = 0.7/3, Z = -round(3*-0.2/0.7) = 1.
  CHECK_FALSE(q.degenerate);
  CHECK(q.retained == 3);
  CHECK(q.zero_point == 1);
  CHECK(static_cast<double>(q.scale) == doctest::Approx(0.7 / 3.0).epsilon(1e-6));
  CHECK(q.keep == std::vector<uint8_t>{7});  // bits 0,1,2 set
  // codes: 0.1 -> round(0.43)+1 = 1; -0.2 -> -1+1 = 0; 0.5 -> 2+1 = 3.
  CHECK(unpack_codes(q.codes, 2, 3) == std::vector<uint64_t>{1, 0, 3});

  Tensor4f back = dequantize(q, 1, 1, 2);
  CHECK(back.v[3] == 0.0f);  // pruned slot stays exactly zero
  const double s = static_cast<double>(q.scale);
  CHECK(static_cast<double>(back.v[0]) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(static_cast<double>(back.v[1]) == doctest::Approx(-s).epsilon(1e-6));
  CHECK(static_cast<double>(back.v[2]) == doctest::Approx(2.0 * s).epsilon(1e-6));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(static_cast<double>(back.v[static_cast<size_t>(i)]) - k.v[static_cast<size_t>(i)]) <=
          s / 2.0 + 1e-7);
}

TEST_CASE("rounding is half-away-from-zero, not banker's") {
  // lo = 0, hi = 3 at 2 bits gives S = 1, Z = 0, so codes are round(w).
  Tensor4f k(1, 1, 2, 2);
  k.v = {0.0f, 0.5f, 2.5f, 3.0f};
  std::vector<uint8_t> mask = {1, 1, 1, 1};
  QuantizedLayer q = quantize_layer(k, mask, 2);
  CHECK(q.zero_point == 0);
  CHECK(static_cast<double>(q.scale) == doctest::Approx(1.0).epsilon(1e-7));
  // Half-even would give 0.5 -> 0 and 2.5 -> 2.
  CHECK(unpack_codes(q.codes, 2, 4) == std::vector<uint64_t>{0, 1, 3, 3});
}

TEST_CASE("degenerate layers keep the shared value at full precision") {
  Tensor4f k(1, 1, 2, 2);
  k.v = {0.25f, 0.25f, 0.0f, 0.25f};
  std::vector<uint8_t> mask = {1, 1, 0, 1};
  QuantizedLayer q = quantize_layer(k, mask, 8);
  CHECK(q.degenerate);
  CHECK(q.scale == 1.0f);
  CHECK(q.zero_point == 0);
  CHECK(q.constant == 0.25f);
  CHECK(q.codes.empty());
  Tensor4f back = dequantize(q, 1, 1, 2);
  CHECK(back.v == std::vector<float>{0.25f, 0.25f, 0.0f, 0.25f});

  // Nothing retained at all: an all-zero layer (the untouched final layer
  // of a fresh net pruned hard) survives the round trip too.
  std::vector<uint8_t> none = {0, 0, 0, 0};
  QuantizedLayer qz = quantize_layer(k, none, 8);
  CHECK(qz.degenerate);
  CHECK(qz.retained == 0);
  Tensor4f zero = dequantize(qz, 1, 1, 2);
  CHECK(zero.v == std::vector<float>(4, 0.0f));
}

TEST_CASE("quantize_layer validates its inputs") {
  Tensor4f k(1, 1, 2, 2);
  std::vector<uint8_t> mask = {1, 1, 1, 1};
  CHECK_THROWS_AS(quantize_layer(k, mask, 0), std::invalid_argument);
  CHECK_THROWS_AS(quantize_layer(k, mask, 33), std::invalid_argument);
  std::vector<uint8_t> wrong = {1, 1};
  CHECK_THROWS_AS(quantize_layer(k, wrong, 8), std::invalid_argument);
}

TEST_CASE("round-trip error respects the half-step bound at 8 bits") {
  Pcg32 rng = make_stream(61, stream_domain::init, 0);
  Tensor4f k(4, 3, 3, 3);
  std::vector<uint8_t> mask(k.size());
  for (size_t i = 0; i < k.size(); ++i) {
    mask[i] = rng.next_double() < 0.3 ? 1 : 0;
    k.v[i] = mask[i] ? static_cast<float>(rng.uniform(-0.8, 0.8)) : 0.0f;
  }
  QuantizedLayer q = quantize_layer(k, mask, 8);
  Tensor4f back = dequantize(q, 4, 3, 3);
  const double bound = static_cast<double>(q.scale) / 2.0 + 4e-7;
  for (size_t i = 0; i < k.size(); ++i) {
    if (!mask[i]) {
      CHECK(back.v[i] == 0.0f);
    } else {
      CHECK(std::abs(static_cast<double>(back.v[i]) - k.v[i]) <= bound);
    }
  }
}

TEST_CASE("model-level quantization zeroes the skeleton and round-trips") {
  NetConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 8;
  cfg.rows = 8;
  cfg.cols = 8;
  Model m = build_xlcnet(cfg, 5);
  // Give the zero-initialized last layer some structure so every layer
  // carries retained weights.
  Pcg32 rng = make_stream(62, stream_domain::init, 0);
  for (auto& w : m.layers[2].kernels.v) w = static_cast<float>(0.1 * rng.normal());
  Model pruned = m;
  PruneMask mask = prune(pruned, 0.5);

  QuantizedModel q = quantize_model(pruned, mask, 8, 0.5);
  CHECK(q.bits == 8);
  CHECK(q.kappa == 0.5);
  REQUIRE(q.layers.size() == 3);
  for (const auto& l : q.skeleton.layers)
    for (float w : l.kernels.v) CHECK(w == 0.0f);  // weights live only in codes
  CHECK(q.skeleton.layers[0].bias == pruned.layers[0].bias);

  Model back = dequantize_model(q);
  uint64_t retained = 0;
  for (size_t l = 0; l < back.layers.size(); ++l) {
    const double s = static_cast<double>(q.layers[l].scale);
    for (size_t i = 0; i < back.layers[l].kernels.v.size(); ++i) {
      const float orig = pruned.layers[l].kernels.v[i];
      const float deq = back.layers[l].kernels.v[i];
      if (orig == 0.0f && !mask.layers[l][i]) {
        CHECK(deq == 0.0f);
      } else {
        ++retained;
        CHECK(std::abs(static_cast<double>(deq) - orig) <= s / 2.0 + 4e-7);
      }
    }
  }
  CHECK(retained == mask.retained);

  CHECK_THROWS_AS(quantize_model(m, PruneMask{}, 8, 0.5), std::invalid_argument);
}

TEST_CASE("quantized_infer equals a forward pass over the dequantized model") {
  NetConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 8;
  cfg.rows = 8;
  cfg.cols = 8;
  Model m = build_xlcnet(cfg, 6);
  Model pruned = m;
  PruneMask mask = prune(pruned, 0.5);
  QuantizedModel q = quantize_model(pruned, mask, 8, 0.5);

  Grid32 in(8, 8);
  Pcg32 rng = make_stream(63, stream_domain::test, 0);
  for (auto& x : in.v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  Grid32 a = quantized_infer(q, in);
  Grid32 b = forward_grid(dequantize_model(q), in);
  CHECK(a.v == b.v);
}

TEST_CASE("compression ratio arithmetic matches the published table") {
  CHECK(compression_ratio(0.9, 8) == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(compression_ratio(0.8, 2) == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(compression_ratio(0.0, 32) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(compression_ratio(1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(compression_ratio(0.9, 0), std::invalid_argument);

  // Effective ratios quoted against ~263K dense parameters: ~29K retained at
  // 8 bits -> 36.28x, ~55K retained at 8 bits -> 19.13x.
  CHECK(effective_ratio(263000, 29000, 8) == doctest::Approx(36.28).epsilon(0.001));
  CHECK(effective_ratio(263000, 55000, 8) == doctest::Approx(19.13).epsilon(0.001));
  CHECK_THROWS_AS(effective_ratio(263000, 0, 8), std::invalid_argument);
}

TEST_CASE("fine_tune keeps pruned weights at exactly zero") {
  NetConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 8;
  cfg.rows = 8;
  cfg.cols = 8;

  HybridChannelSpec spec;
  spec.geometry = ArrayGeometry::half_wavelength(64, 0.01);
  spec.total_paths = 3;
  spec.far_paths = 0;
  DatasetRecipe r;
  r.channel = spec;
  r.count = 48;
  r.rows = 8;
  r.cols = 8;
  r.master_seed = 64;
  Dataset train_set = make_dataset(r);
  r.count = 16;
  r.domain = stream_domain::val;
  Dataset val_set = make_dataset(r);

  Model m = build_xlcnet(cfg, 7);
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch_size = 16;
  opt.seed = 64;
  train(m, train_set, val_set, opt);  // move weights off init first

  PruneMask mask = prune(m, 0.6);
  fine_tune(m, mask, train_set, val_set, 2, opt);

  uint64_t zeros = 0, moved = 0;
  for (size_t l = 0; l < m.layers.size(); ++l)
    for (size_t i = 0; i < m.layers[l].kernels.v.size(); ++i) {
      if (!mask.layers[l][i]) {
        CHECK(m.layers[l].kernels.v[i] == 0.0f);
        ++zeros;
      } else if (m.layers[l].kernels.v[i] != 0.0f) {
        ++moved;
      }
    }
  CHECK(zeros == mask.total - mask.retained);
  CHECK(moved > 0);
}
