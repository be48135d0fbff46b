// Dataset synthesis: (LS grid, truth grid, SNR) triples generated per the
// hybrid-field recipe. Sample i draws everything from its own stream
// make_stream(master_seed, domain, i), so regeneration is bit-exact and
// order-independent.

#pragma once

#include <cstdint>
#include <vector>

#include "xlc/channel.hpp"
#include "xlc/estimate.hpp"
#include "xlc/rng.hpp"

namespace xlc {

struct Sample {
  float snr_db = 0.0f;  // +inf marks a noiseless sample
  Grid32 ls;
  Grid32 truth;
};

struct Dataset {
  int antennas = 0;
  int rows = 0, cols = 0;
  uint64_t seed = 0;    // master seed it was generated from
  uint64_t domain = 0;  // stream domain (train/val/test)
  std::vector<Sample> samples;
};

struct DatasetRecipe {
  HybridChannelSpec channel;
  int count = 0;
  double snr_min = 0.0, snr_max = 20.0;  // dB; equal bounds pin the SNR, +inf = noiseless
  int rows = 0, cols = 0;                // rows*cols must equal the antenna count
  uint64_t master_seed = 1;
  uint64_t domain = stream_domain::train;

  void validate() const;
};

// Per-sample draw order: SNR (skipped when the range is a point), path
// parameters, then observation noise. Part of the bit-compatibility contract.
Sample make_sample(const HybridChannelSpec& spec, double snr_min, double snr_max, int rows,
                   int cols, Pcg32& rng);

Dataset make_dataset(const DatasetRecipe& r);

}  // namespace xlc
