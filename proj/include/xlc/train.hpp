// Mini-batch training loop, fine-tuning under a prune mask, and Monte-Carlo
// NMSE evaluation of every estimator against a common test set.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "xlc/compress.hpp"
#include "xlc/dataset.hpp"
#include "xlc/model.hpp"

namespace xlc {

struct TrainOptions {
  int epochs = 200;
  int batch_size = 128;
  double lr = 1e-3;
  uint64_t seed = 1;  // drives epoch shuffles (not parameter init)
  kernels::Backend backend = kernels::best_backend();
  std::ostream* log = nullptr;              // optional per-epoch progress lines
  const PruneMask* mask = nullptr;          // frozen-zero fine-tuning when set
};

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // total SSE / sample count over the epoch
  double val_loss = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_val_epoch = 0;  // 1-based epoch with the lowest validation loss
};

// Minimizes the batch-mean sum-of-squares loss with Adam over shuffled
// mini-batches; the model keeps its final-epoch weights. Non-finite loss
// aborts with a diagnostic.
TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainOptions& opt);

// Pruned-model retraining: identical loop, but masked kernel weights receive
// no updates and therefore stay exactly zero.
TrainResult fine_tune(Model& model, const PruneMask& mask, const Dataset& train_set,
                      const Dataset& val_set, int epochs, TrainOptions opt = {});

// Mean validation-style loss of a model on a dataset (inference mode).
double eval_loss(const Model& model, const Dataset& data, int batch_size,
                 kernels::Backend backend);

// Two NMSE summaries: `aggregate_nmse` pools energies (sum |err|^2 over the
// set / sum |truth|^2), which is what "mean NMSE" denotes everywhere in this
// toolkit — it matches the analytic LS level 10^(-SNR/10). `mean_nmse`
// averages per-sample ratios; heavy low-energy tails inflate it by roughly
// L/(L-1), so it is reported only as a secondary diagnostic.
struct EvalStats {
  double mean_nmse = 0.0;       // mean over samples of per-sample NMSE
  double aggregate_nmse = 0.0;  // pooled sum |err|^2 / sum |truth|^2
  int count = 0;

  double mean_nmse_db() const;
  double aggregate_nmse_db() const;
};

EvalStats evaluate_ls(const Dataset& test);
EvalStats evaluate_model(const Model& model, const Dataset& test,
                         kernels::Backend backend = kernels::best_backend());
// The filter is built once for the dataset's SNR; requires a point-SNR set.
EvalStats evaluate_lmmse(const Dataset& test, const Eigen::MatrixXcd& covariance,
                         double snr_db);

// Convenience matching the one-number contract: fresh test samples at one
// SNR, mean (pooled) NMSE of the model's estimates.
double evaluate(const Model& model, const HybridChannelSpec& spec, double snr_db, int count,
                int rows, int cols, uint64_t seed);

// Channel covariance for the LMMSE baseline, from `count` fresh channel
// draws on the covariance stream domain.
Eigen::MatrixXcd covariance_from_spec(const HybridChannelSpec& spec, int count, uint64_t seed);

}  // namespace xlc
