// Model compression: global magnitude pruning over all kernel weights, and
// per-layer post-training uniform affine quantization with packed low-bit
// storage. Biases and batch-norm parameters are exempt from both (they are
// under 1% of the parameters and BN statistics are scale-sensitive).

#pragma once

#include <cstdint>
#include <vector>

#include "xlc/model.hpp"
#include "xlc/tensor.hpp"

namespace xlc {

struct PruneMask {
  // One byte per kernel weight in storage order; 1 = retained.
  std::vector<std::vector<uint8_t>> layers;
  uint64_t total = 0;
  uint64_t retained = 0;
};

// theta = the floor(kappa * N_w)-th smallest |w| (1-based) over every kernel
// weight of every layer jointly. Requires 0 < kappa < 1 and floor(kappa*N_w)
// >= 1.
float compute_threshold(const Model& m, double kappa);

// Zeroes every kernel weight with |w| < theta (weights at the threshold are
// kept). Biases and BN parameters are untouched. Returns the retention mask.
PruneMask prune(Model& m, double kappa);

// Mask with every weight retained (kappa = 0 workflows).
PruneMask full_mask(const Model& m);

// Reconstruct a mask from a pruned model's zeros. Only sound when retained
// weights are nonzero, which prune() guarantees for theta > 0.
PruneMask mask_from_nonzero(const Model& m);

struct QuantizedLayer {
  uint32_t bits = 8;
  bool degenerate = false;  // all retained weights equal (or none retained)
  float scale = 1.0f;       // S; sentinel 1 when degenerate
  int64_t zero_point = 0;   // Z; sentinel 0 when degenerate
  float constant = 0.0f;    // the shared retained value when degenerate
  uint64_t retained = 0;
  std::vector<uint8_t> keep;   // retention bitmap, LSB-first in kernel storage order
  std::vector<uint8_t> codes;  // packed codes, b bits each, LSB-first, empty when degenerate
};

struct QuantizedModel {
  Model skeleton;  // kernels zeroed; biases, BN, flags at full precision
  std::vector<QuantizedLayer> layers;
  double kappa = 0.0;  // declared pruning ratio, for reporting
  int bits = 8;
};

// LSB-first packing: code i occupies bit offsets [i*bits, (i+1)*bits).
std::vector<uint8_t> pack_codes(const std::vector<uint64_t>& codes, int bits);
std::vector<uint64_t> unpack_codes(const std::vector<uint8_t>& bytes, int bits, size_t count);

// S = (max-min)/(2^b - 1) and Z = -round((2^b - 1) * min / (max - min)) over
// the retained weights; each retained w maps to clamp(round(w/S) + Z). A
// layer whose retained weights are all equal (or absent) is stored as a
// full-precision constant with the S=1, Z=0 sentinel. round() is
// half-away-from-zero everywhere for bit-exact checkpoints.
QuantizedLayer quantize_layer(const Tensor4f& kernels, const std::vector<uint8_t>& mask,
                              int bits);

// Retained weights become S*(code - Z); masked-out positions are exact 0.
Tensor4f dequantize(const QuantizedLayer& q, int out_ch, int in_ch, int ksize);

QuantizedModel quantize_model(const Model& m, const PruneMask& mask, int bits, double kappa);
Model dequantize_model(const QuantizedModel& q);

// Simulated-quantization inference: dequantize, then the standard forward.
// Callers running many grids should dequantize_model once instead.
Grid32 quantized_infer(const QuantizedModel& q, const Grid32& ls,
                       kernels::Backend b = kernels::best_backend());

// Nominal ratio 32 / (b * (1 - kappa)); the effective form uses actual
// parameter counts.
double compression_ratio(double kappa, int bits);
double effective_ratio(uint64_t dense_params, uint64_t retained_params, int bits);

}  // namespace xlc
