#include "xlc/compress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xlc {

float compute_threshold(const Model& m, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("compute_threshold: kappa must lie in (0, 1)");
  std::vector<float> mags;
  for (const auto& l : m.layers)
    for (float w : l.kernels.v) mags.push_back(std::fabs(w));
  const auto rank = static_cast<size_t>(std::floor(kappa * static_cast<double>(mags.size())));
  if (rank < 1)
    throw std::invalid_argument("compute_threshold: kappa * weight count is below 1");
  std::nth_element(mags.begin(), mags.begin() + (rank - 1), mags.end());
  return mags[rank - 1];
}

PruneMask prune(Model& m, double kappa) {
  const float theta = compute_threshold(m, kappa);
  PruneMask mask;
  for (auto& l : m.layers) {
    std::vector<uint8_t> keep(l.kernels.size());
    for (size_t i = 0; i < l.kernels.v.size(); ++i) {
      const bool retained = std::fabs(l.kernels.v[i]) >= theta;
      keep[i] = retained ? 1 : 0;
      if (!retained) l.kernels.v[i] = 0.0f;
      mask.retained += retained;
    }
    mask.total += keep.size();
    mask.layers.push_back(std::move(keep));
  }
  return mask;
}

PruneMask full_mask(const Model& m) {
  PruneMask mask;
  for (const auto& l : m.layers) {
    mask.layers.emplace_back(l.kernels.size(), uint8_t(1));
    mask.total += l.kernels.size();
  }
  mask.retained = mask.total;
  return mask;
}

PruneMask mask_from_nonzero(const Model& m) {
  PruneMask mask;
  for (const auto& l : m.layers) {
    std::vector<uint8_t> keep(l.kernels.size());
    for (size_t i = 0; i < l.kernels.v.size(); ++i) {
      keep[i] = l.kernels.v[i] != 0.0f ? 1 : 0;
      mask.retained += keep[i];
    }
    mask.total += keep.size();
    mask.layers.push_back(std::move(keep));
  }
  return mask;
}

std::vector<uint8_t> pack_codes(const std::vector<uint64_t>& codes, int bits) {
  if (bits < 1 || bits > 32) throw std::invalid_argument("pack_codes: bits must be in [1, 32]");
  std::vector<uint8_t> out((codes.size() * bits + 7) / 8, 0);
  size_t bitpos = 0;
  for (uint64_t code : codes) {
    for (int b = 0; b < bits; ++b, ++bitpos)
      if ((code >> b) & 1u) out[bitpos >> 3] |= static_cast<uint8_t>(1u << (bitpos & 7));
  }
  return out;
}

std::vector<uint64_t> unpack_codes(const std::vector<uint8_t>& bytes, int bits, size_t count) {
  if (bits < 1 || bits > 32) throw std::invalid_argument("unpack_codes: bits must be in [1, 32]");
  if (bytes.size() < (count * bits + 7) / 8)
    throw std::invalid_argument("unpack_codes: byte buffer too short");
  std::vector<uint64_t> out(count, 0);
  size_t bitpos = 0;
  for (size_t i = 0; i < count; ++i) {
    uint64_t code = 0;
    for (int b = 0; b < bits; ++b, ++bitpos)
      if (bytes[bitpos >> 3] >> (bitpos & 7) & 1u) code |= uint64_t(1) << b;
    out[i] = code;
  }
  return out;
}

QuantizedLayer quantize_layer(const Tensor4f& kernels, const std::vector<uint8_t>& mask,
                              int bits) {
  if (bits < 1 || bits > 32) throw std::invalid_argument("quantize_layer: bits must be in [1, 32]");
  if (mask.size() != kernels.size())
    throw std::invalid_argument("quantize_layer: mask shape does not match kernels");

  QuantizedLayer q;
  q.bits = static_cast<uint32_t>(bits);
  q.keep.assign((mask.size() + 7) / 8, 0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    q.keep[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
    ++q.retained;
    lo = std::min(lo, static_cast<double>(kernels.v[i]));
    hi = std::max(hi, static_cast<double>(kernels.v[i]));
  }

  if (q.retained == 0 || lo == hi) {
    // All retained weights equal (or none): the affine map degenerates, so
    // the shared value is kept at full precision instead.
    q.degenerate = true;
    q.scale = 1.0f;
    q.zero_point = 0;
    q.constant = q.retained ? static_cast<float>(lo) : 0.0f;
    return q;
  }

  const double levels = std::pow(2.0, bits) - 1.0;
  const double scale = (hi - lo) / levels;
  const int64_t zp = static_cast<int64_t>(-std::round(levels * lo / (hi - lo)));
  q.scale = static_cast<float>(scale);
  q.zero_point = zp;

  std::vector<uint64_t> codes;
  codes.reserve(q.retained);
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    double c = std::round(static_cast<double>(kernels.v[i]) / scale) + static_cast<double>(zp);
    c = std::clamp(c, 0.0, levels);
    codes.push_back(static_cast<uint64_t>(c));
  }
  q.codes = pack_codes(codes, bits);
  return q;
}

Tensor4f dequantize(const QuantizedLayer& q, int out_ch, int in_ch, int ksize) {
  Tensor4f kernels(out_ch, in_ch, ksize, ksize);
  const size_t n = kernels.size();
  if (q.keep.size() != (n + 7) / 8)
    throw std::invalid_argument("dequantize: bitmap does not match the kernel shape");
  std::vector<uint64_t> codes;
  if (!q.degenerate) codes = unpack_codes(q.codes, static_cast<int>(q.bits), q.retained);
  size_t next = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!(q.keep[i >> 3] >> (i & 7) & 1u)) continue;  // pruned stays exact 0
    if (q.degenerate) {
      kernels.v[i] = q.constant;
    } else {
      const double code = static_cast<double>(codes.at(next++));
      kernels.v[i] =
          static_cast<float>(static_cast<double>(q.scale) * (code - static_cast<double>(q.zero_point)));
    }
  }
  return kernels;
}

QuantizedModel quantize_model(const Model& m, const PruneMask& mask, int bits, double kappa) {
  if (mask.layers.size() != m.layers.size())
    throw std::invalid_argument("quantize_model: mask layer count mismatch");
  QuantizedModel q;
  q.bits = bits;
  q.kappa = kappa;
  q.skeleton = m;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    q.layers.push_back(quantize_layer(m.layers[l].kernels, mask.layers[l], bits));
    q.skeleton.layers[l].kernels.fill(0.0f);
  }
  return q;
}

Model dequantize_model(const QuantizedModel& q) {
  Model m = q.skeleton;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    const auto& k = q.skeleton.layers[l].kernels;
    m.layers[l].kernels = dequantize(q.layers[l], k.n, k.c, k.h);
  }
  return m;
}

Grid32 quantized_infer(const QuantizedModel& q, const Grid32& ls, kernels::Backend b) {
  return forward_grid(dequantize_model(q), ls, b);
}

double compression_ratio(double kappa, int bits) {
  if (kappa < 0.0 || kappa >= 1.0)
    throw std::invalid_argument("compression_ratio: kappa must lie in [0, 1)");
  if (bits < 1) throw std::invalid_argument("compression_ratio: bits must be >= 1");
  return 32.0 / (static_cast<double>(bits) * (1.0 - kappa));
}

double effective_ratio(uint64_t dense_params, uint64_t retained_params, int bits) {
  if (retained_params == 0 || bits < 1)
    throw std::invalid_argument("effective_ratio: need retained params and bits >= 1");
  return (static_cast<double>(dense_params) * 32.0) /
         (static_cast<double>(retained_params) * static_cast<double>(bits));
}

}  // namespace xlc
