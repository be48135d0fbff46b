#include "xlc/train.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>

#include "xlc/adam.hpp"
#include "xlc/estimate.hpp"

namespace xlc {

namespace {

void check_dataset(const Model& model, const Dataset& d, const char* what) {
  if (d.samples.empty()) throw std::invalid_argument(std::string(what) + ": empty dataset");
  if (d.rows != model.rows || d.cols != model.cols)
    throw std::invalid_argument(std::string(what) + ": dataset grid dims do not match model");
}

// Copy a batch of samples into input/target tensors. Grid storage equals one
// NHWC sample, so each grid is a single contiguous copy.
void fill_batch(const Dataset& d, const std::vector<uint32_t>& order, size_t first, size_t count,
                Tensor4f& in, Tensor4f& target) {
  const size_t per = static_cast<size_t>(d.rows) * d.cols * 2;
  for (size_t k = 0; k < count; ++k) {
    const Sample& s = d.samples[order[first + k]];
    std::memcpy(in.data() + k * per, s.ls.v.data(), per * sizeof(float));
    std::memcpy(target.data() + k * per, s.truth.v.data(), per * sizeof(float));
  }
}

struct ParamView {
  std::vector<std::span<float>> params;
  std::vector<const uint8_t*> masks;
  std::vector<size_t> sizes;
};

ParamView build_param_view(Model& m, const PruneMask* mask) {
  if (mask && mask->layers.size() != m.layers.size())
    throw std::invalid_argument("train: prune mask does not match the model");
  ParamView v;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    ConvLayer<float>& layer = m.layers[l];
    v.params.emplace_back(layer.kernels.v);
    v.masks.push_back(mask ? mask->layers[l].data() : nullptr);
    v.params.emplace_back(layer.bias);
    v.masks.push_back(nullptr);
    if (layer.batch_norm) {
      v.params.emplace_back(layer.bn.gamma);
      v.masks.push_back(nullptr);
      v.params.emplace_back(layer.bn.beta);
      v.masks.push_back(nullptr);
    }
  }
  for (const auto& s : v.params) v.sizes.push_back(s.size());
  return v;
}

// Gradient spans in the exact order build_param_view emits parameters.
std::vector<std::span<const float>> grad_view(const Model& m, ModelGrads<float>& g) {
  std::vector<std::span<const float>> out;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    out.emplace_back(g.conv[l].dkernels.v);
    out.emplace_back(g.conv[l].dbias);
    if (m.layers[l].batch_norm) {
      out.emplace_back(g.bn[l].dgamma);
      out.emplace_back(g.bn[l].dbeta);
    }
  }
  return out;
}

}  // namespace

double eval_loss(const Model& model, const Dataset& data, int batch_size,
                 kernels::Backend backend) {
  check_dataset(model, data, "eval_loss");
  const size_t n = data.samples.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  double sse = 0.0;
  for (size_t first = 0; first < n; first += static_cast<size_t>(batch_size)) {
    const size_t count = std::min(static_cast<size_t>(batch_size), n - first);
    Tensor4f in(static_cast<int>(count), 2, data.rows, data.cols);
    Tensor4f target(static_cast<int>(count), 2, data.rows, data.cols);
    fill_batch(data, order, first, count, in, target);
    Tensor4f out = model_forward(model, in, BnMode::infer, nullptr, backend);
    auto [loss, grad] = mse_loss(out, target);
    (void)grad;
    sse += loss * static_cast<double>(count);
  }
  return sse / static_cast<double>(n);
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainOptions& opt) {
  check_dataset(model, train_set, "train");
  check_dataset(model, val_set, "train(val)");
  if (opt.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (opt.batch_size < 2)
    throw std::invalid_argument("train: batch size must be >= 2 for batch norm");

  ParamView view = build_param_view(model, opt.mask);
  AdamState<float> adam;
  adam.cfg.lr = opt.lr;
  adam.init(view.sizes);

  const size_t n = train_set.samples.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    // Fisher-Yates on its own stream: shuffles depend only on (seed, epoch).
    Pcg32 shuffle = make_stream(opt.seed, stream_domain::shuffle, static_cast<uint64_t>(epoch));
    for (size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle.bounded(static_cast<uint32_t>(i + 1))]);

    double sse = 0.0;
    size_t used = 0;
    for (size_t first = 0; first < n; first += static_cast<size_t>(opt.batch_size)) {
      const size_t count = std::min(static_cast<size_t>(opt.batch_size), n - first);
      if (count < 2) break;  // a singleton tail cannot be batch-normalized
      Tensor4f in(static_cast<int>(count), 2, train_set.rows, train_set.cols);
      Tensor4f target(static_cast<int>(count), 2, train_set.rows, train_set.cols);
      fill_batch(train_set, order, first, count, in, target);

      ForwardCache<float> cache;
      Tensor4f out = model_forward(model, in, BnMode::train, &cache, opt.backend);
      auto [loss, grad] = mse_loss(out, target);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(first / opt.batch_size));
      model_update_running_stats(model, cache);

      ModelGrads<float> grads;
      model_backward(model, cache, grad, grads, opt.backend);
      adam_step(adam, view.params, grad_view(model, grads), view.masks);

      sse += loss * static_cast<double>(count);
      used += count;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = sse / static_cast<double>(used);
    stats.val_loss = eval_loss(model, val_set, opt.batch_size, opt.backend);
    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      result.best_val_epoch = epoch;
    }
    result.history.push_back(stats);
    if (opt.log)
      (*opt.log) << "epoch " << epoch << "/" << opt.epochs << "  train_loss " << stats.train_loss
                 << "  val_loss " << stats.val_loss << "\n";
  }
  return result;
}

TrainResult fine_tune(Model& model, const PruneMask& mask, const Dataset& train_set,
                      const Dataset& val_set, int epochs, TrainOptions opt) {
  opt.mask = &mask;
  opt.epochs = epochs;
  return train(model, train_set, val_set, opt);
}

double EvalStats::mean_nmse_db() const { return nmse_db(mean_nmse); }
double EvalStats::aggregate_nmse_db() const { return nmse_db(aggregate_nmse); }

namespace {

EvalStats finish(double ratio_sum, double err_sum, double truth_sum, int count) {
  EvalStats s;
  s.count = count;
  s.mean_nmse = ratio_sum / count;
  s.aggregate_nmse = err_sum / truth_sum;
  return s;
}

}  // namespace

EvalStats evaluate_ls(const Dataset& test) {
  if (test.samples.empty()) throw std::invalid_argument("evaluate_ls: empty test set");
  double ratio = 0.0, err = 0.0, tot = 0.0;
  for (const Sample& s : test.samples) {
    double e = 0.0, t = 0.0;
    for (size_t i = 0; i < s.truth.v.size(); ++i) {
      const double d = static_cast<double>(s.ls.v[i]) - s.truth.v[i];
      e += d * d;
      t += static_cast<double>(s.truth.v[i]) * s.truth.v[i];
    }
    ratio += e / t;
    err += e;
    tot += t;
  }
  return finish(ratio, err, tot, static_cast<int>(test.samples.size()));
}

EvalStats evaluate_model(const Model& model, const Dataset& test, kernels::Backend backend) {
  check_dataset(model, test, "evaluate_model");
  const size_t n = test.samples.size();
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  constexpr size_t kBatch = 128;
  double ratio = 0.0, err = 0.0, tot = 0.0;
  for (size_t first = 0; first < n; first += kBatch) {
    const size_t count = std::min(kBatch, n - first);
    Tensor4f in(static_cast<int>(count), 2, test.rows, test.cols);
    Tensor4f target(static_cast<int>(count), 2, test.rows, test.cols);
    fill_batch(test, order, first, count, in, target);
    Tensor4f out = model_forward(model, in, BnMode::infer, nullptr, backend);
    const size_t per = static_cast<size_t>(test.rows) * test.cols * 2;
    for (size_t k = 0; k < count; ++k) {
      double e = 0.0, t = 0.0;
      const float* o = out.data() + k * per;
      const float* tr = target.data() + k * per;
      for (size_t i = 0; i < per; ++i) {
        const double d = static_cast<double>(o[i]) - tr[i];
        e += d * d;
        t += static_cast<double>(tr[i]) * tr[i];
      }
      ratio += e / t;
      err += e;
      tot += t;
    }
  }
  return finish(ratio, err, tot, static_cast<int>(n));
}

EvalStats evaluate_lmmse(const Dataset& test, const Eigen::MatrixXcd& covariance,
                         double snr_db) {
  if (test.samples.empty()) throw std::invalid_argument("evaluate_lmmse: empty test set");
  const bool noiseless = std::isinf(snr_db) && snr_db > 0.0;
  const double power = noiseless ? 1.0 : snr_to_power(snr_db);
  const double noise_power = noiseless ? 0.0 : 1.0;
  LmmseFilter filter(covariance, power, noise_power);

  double ratio = 0.0, err = 0.0, tot = 0.0;
  for (const Sample& s : test.samples) {
    Cvec ls(static_cast<size_t>(test.rows) * test.cols);
    Cvec truth(ls.size());
    for (size_t m = 0; m < ls.size(); ++m) {
      ls[m] = {static_cast<double>(s.ls.v[2 * m]), static_cast<double>(s.ls.v[2 * m + 1])};
      truth[m] = {static_cast<double>(s.truth.v[2 * m]),
                  static_cast<double>(s.truth.v[2 * m + 1])};
    }
    Cvec est = filter.apply(ls);
    double e = 0.0, t = 0.0;
    for (size_t m = 0; m < est.size(); ++m) {
      e += std::norm(est[m] - truth[m]);
      t += std::norm(truth[m]);
    }
    ratio += e / t;
    err += e;
    tot += t;
  }
  return finish(ratio, err, tot, static_cast<int>(test.samples.size()));
}

double evaluate(const Model& model, const HybridChannelSpec& spec, double snr_db, int count,
                int rows, int cols, uint64_t seed) {
  DatasetRecipe r;
  r.channel = spec;
  r.count = count;
  r.snr_min = r.snr_max = snr_db;
  r.rows = rows;
  r.cols = cols;
  r.master_seed = seed;
  r.domain = stream_domain::test;
  return evaluate_model(model, make_dataset(r)).aggregate_nmse;
}

Eigen::MatrixXcd covariance_from_spec(const HybridChannelSpec& spec, int count, uint64_t seed) {
  if (count < 1) throw std::invalid_argument("covariance_from_spec: count must be >= 1");
  CovarianceAccumulator acc(spec.geometry.antennas);
  for (int i = 0; i < count; ++i) {
    Pcg32 rng = make_stream(seed, stream_domain::covariance, static_cast<uint64_t>(i));
    acc.add(gen_channel(sample_paths(spec, rng), spec.geometry));
  }
  return acc.finish();
}

}  // namespace xlc
