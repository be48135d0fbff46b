// Plain-text `key = value` experiment configuration: one flat namespace, `#`
// comments, unknown keys rejected with line numbers. The canonical text of a
// config (sorted keys, normalized values) feeds an FNV-1a hash that artifacts
// carry so mismatched runs are detectable.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xlc/channel.hpp"
#include "xlc/dataset.hpp"
#include "xlc/model.hpp"
#include "xlc/train.hpp"

namespace xlc {

// Environment variable consulted for a default config path when the CLI gets
// no --config flag.
inline constexpr const char* kConfigEnvVar = "XLC_CONFIG";

struct ExperimentConfig {
  // Reproducibility
  uint64_t seed = 1;

  // Array and channel
  int antennas = 256;
  double wavelength = 0.01;  // meters
  double spacing = -1.0;     // element pitch, meters; -1 = half wavelength
  int paths = 6;             // L per channel draw
  int far_paths = 1;         // L0 far-field paths, the rest near-field
  double power_gain = 1.0;   // E|gain|^2 per path
  double distance_min = 10.0;
  double distance_max = 80.0;

  // Grid factorization of the antenna vector; 0/0 = most-square automatic
  int grid_rows = 0;
  int grid_cols = 0;

  // Network
  int layers = 9;
  int hidden_channels = 64;
  int kernel_size = 3;

  // Training
  int epochs = 30;
  int batch_size = 128;
  double learning_rate = 1e-3;
  int train_samples = 20000;
  int val_samples = 2000;
  double train_snr_min = 0.0;  // dB; inf = noiseless
  double train_snr_max = 20.0;

  // Compression
  double prune_ratio = 0.9;  // kappa
  int finetune_epochs = 10;
  int quant_bits = 8;

  // Evaluation
  int test_samples = 2000;
  double test_snr = 10.0;          // dB; single-point evaluations
  std::string snr_sweep = "0:20:5";  // start:stop:step, or one value
  std::string test_field = "near";   // near | far | hybrid
  int test_paths = 3;
  int lmmse_samples = 100000;  // channel draws behind the empirical covariance

  void validate() const;

  // Normalized `key = value` lines, sorted by key; hash() is FNV-1a-64 of it.
  std::string canonical_text() const;
  uint64_t hash() const;

  ArrayGeometry geometry() const;          // spacing sentinel resolved
  std::pair<int, int> grid_dims() const;   // auto dims resolved
  HybridChannelSpec channel() const;       // training/validation channel
  HybridChannelSpec test_channel() const;  // test_field/test_paths applied
  NetConfig net() const;
  DatasetRecipe train_recipe() const;
  DatasetRecipe val_recipe() const;
  DatasetRecipe test_recipe(double snr_db) const;
  TrainOptions train_options() const;      // log/mask left unset
  std::vector<double> sweep_points() const;
};

// Parses config text; `name` labels diagnostics ("name: line N: ...").
ExperimentConfig parse_config_text(const std::string& text, const std::string& name = "<config>");
ExperimentConfig load_config(const std::string& path);

// Applies one `key=value` command-line override.
void apply_override(ExperimentConfig& c, const std::string& assignment);

// The default configuration in canonical form (a valid config file).
std::string default_config_text();

// Non-fatal observations about a channel spec (e.g. the hybrid far-path
// count falling outside the 1..L/2 modeling guideline).
std::vector<std::string> spec_advisories(const HybridChannelSpec& spec);

}  // namespace xlc
