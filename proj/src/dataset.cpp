#include "xlc/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace xlc {

void DatasetRecipe::validate() const {
  channel.validate();
  if (count < 1) throw std::invalid_argument("DatasetRecipe: count must be >= 1");
  if (rows < 1 || cols < 1 || rows * cols != channel.geometry.antennas)
    throw std::invalid_argument("DatasetRecipe: rows*cols must equal the antenna count");
  if (std::isnan(snr_min) || std::isnan(snr_max) || snr_min > snr_max)
    throw std::invalid_argument("DatasetRecipe: need snr_min <= snr_max");
}

Sample make_sample(const HybridChannelSpec& spec, double snr_min, double snr_max, int rows,
                   int cols, Pcg32& rng) {
  const double snr = snr_min == snr_max ? snr_min : rng.uniform(snr_min, snr_max);
  const bool noiseless = std::isinf(snr) && snr > 0.0;
  // Noise power is normalized to 1; transmit power carries the SNR.
  const double power = noiseless ? 1.0 : snr_to_power(snr);
  const double noise_power = noiseless ? 0.0 : 1.0;

  std::vector<PathParams> paths = sample_paths(spec, rng);
  Cvec h = gen_channel(paths, spec.geometry);
  Observation obs = observe(h, power, noise_power, rng);
  Cvec ls = ls_estimate(obs);

  Sample s;
  s.snr_db = static_cast<float>(snr);
  s.ls = grid_to_f32(reshape_to_grid(ls, rows, cols));
  s.truth = grid_to_f32(reshape_to_grid(h, rows, cols));
  return s;
}

Dataset make_dataset(const DatasetRecipe& r) {
  r.validate();
  Dataset d;
  d.antennas = r.channel.geometry.antennas;
  d.rows = r.rows;
  d.cols = r.cols;
  d.seed = r.master_seed;
  d.domain = r.domain;
  d.samples.reserve(static_cast<size_t>(r.count));
  for (int i = 0; i < r.count; ++i) {
    Pcg32 rng = make_stream(r.master_seed, r.domain, static_cast<uint64_t>(i));
    d.samples.push_back(make_sample(r.channel, r.snr_min, r.snr_max, r.rows, r.cols, rng));
  }
  return d;
}

}  // namespace xlc
