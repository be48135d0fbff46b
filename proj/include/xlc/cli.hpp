// Command-line front end: experiment orchestration over the library modules.
// cli_dispatch is stream-injected so tests can drive subcommands in-process.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xlc/compress.hpp"
#include "xlc/config.hpp"
#include "xlc/model.hpp"

namespace xlc {

// Subcommands: generate, train, prune, finetune, quantize, eval, report,
// gradcheck. Returns the process exit status (0 on success); errors print a
// diagnostic to `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct SweepRow {
  std::string estimator;
  double snr_db = 0.0;
  double nmse = 0.0;  // pooled over the test set
  int samples = 0;
  uint64_t seed = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// One fresh test set per SNR point (common across estimators so rows at the
// same SNR are paired); learned estimators are optional and evaluated only
// when requested by name. Estimator names: ls, lmmse, xlcnet, cxlcnet.
SweepResult run_snr_sweep(const ExperimentConfig& cfg,
                          const std::vector<std::string>& estimators,
                          const Model* model = nullptr,
                          const QuantizedModel* quantized = nullptr);

// CSV with the stable header `estimator,snr_db,nmse,nmse_db,samples,seed`.
std::string sweep_csv(const SweepResult& r);

struct RuntimeStats {
  double median_ms = 0.0;  // per-sample inference wall time
  double p10_ms = 0.0;
  double p90_ms = 0.0;
  int batch = 0;
  int repetitions = 0;
  uint64_t macs_dense = 0;
  uint64_t macs_retained = 0;
  std::string machine;  // CPU descriptor + active kernel backend
};

// Wall-time statistics of batched inference; informational only.
RuntimeStats benchmark_runtime(const Model& m, int batch, int repetitions);

}  // namespace xlc
