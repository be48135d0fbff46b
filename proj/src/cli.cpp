#include "xlc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "xlc/gradcheck.hpp"
#include "xlc/io.hpp"
#include "xlc/train.hpp"

namespace xlc {

namespace {

std::string hex64(uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const size_t a = cur.find_first_not_of(" \t");
    if (a != std::string::npos) {
      const size_t b = cur.find_last_not_of(" \t");
      out.push_back(cur.substr(a, b - a + 1));
    }
    cur.clear();
  };
  for (char ch : s) {
    if (ch == ',')
      flush();
    else
      cur += ch;
  }
  flush();
  return out;
}

std::string cpu_descriptor() {
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      const size_t colon = line.find(':');
      if (colon != std::string::npos) {
        const size_t a = line.find_first_not_of(" \t", colon + 1);
        if (a != std::string::npos) return line.substr(a);
      }
    }
  }
  return "unknown CPU";
}

// Shared --config/--set handling. Overrides are applied in order, extra
// assignments (subcommand shorthand flags) after them, then validated once.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path,
                    std::string("config file (falls back to $") + kConfigEnvVar + ")");
    sub->add_option("--set", sets, "override a config key, key=value (repeatable)")
        ->allow_extra_args(false);
  }

  ExperimentConfig resolve(const std::vector<std::string>& extra = {}) const {
    ExperimentConfig c;
    if (!config_path.empty()) {
      c = load_config(config_path);
    } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
      c = load_config(env);
    }
    for (const auto& s : sets) apply_override(c, s);
    for (const auto& s : extra) apply_override(c, s);
    c.validate();
    return c;
  }
};

void print_advisories(const ExperimentConfig& cfg, std::ostream& err) {
  std::vector<std::string> notes = spec_advisories(cfg.channel());
  for (const auto& n : spec_advisories(cfg.test_channel()))
    if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.push_back(n);
  for (const auto& n : notes) err << "warning: " << n << "\n";
}

Dataset dataset_for(const ExperimentConfig& cfg, const DatasetRecipe& recipe,
                    const std::string& file, std::ostream& err) {
  if (file.empty()) return make_dataset(recipe);
  Dataset d = read_dataset(file);
  if (d.rows != recipe.rows || d.cols != recipe.cols)
    throw std::invalid_argument(file + ": grid " + std::to_string(d.rows) + "x" +
                                std::to_string(d.cols) + " does not match the configured " +
                                std::to_string(recipe.rows) + "x" + std::to_string(recipe.cols));
  if (d.seed != (cfg.seed & 0xFFFFFFFFull))
    err << "note: " << file << " was generated from a different master seed\n";
  return d;
}

void hash_note(uint64_t artifact_hash, const ExperimentConfig& cfg, const std::string& path,
               std::ostream& err) {
  if (artifact_hash != 0 && artifact_hash != cfg.hash())
    err << "note: " << path << " carries config " << hex64(artifact_hash)
        << ", active config is " << hex64(cfg.hash()) << "\n";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error(path + ": write failed");
}

struct TrainSummary {
  double minutes = 0.0;
  TrainResult result;
};

TrainSummary run_training(Model& model, const Dataset& tr, const Dataset& va,
                          const TrainOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainSummary s;
  s.result = train(model, tr, va, opt);
  s.minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return s;
}

void print_train_summary(std::ostream& out, const TrainSummary& s) {
  const EpochStats& last = s.result.history.back();
  out << "done in " << fmt("%.1f", s.minutes) << " min: train_loss "
      << fmt("%.6g", last.train_loss) << ", val_loss " << fmt("%.6g", last.val_loss)
      << ", best val epoch " << s.result.best_val_epoch << "\n";
}

int cmd_generate(const Common& common, const std::string& out_path, const std::string& split,
                 int count, double snr, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = common.resolve();
  print_advisories(cfg, err);
  DatasetRecipe r;
  if (split == "train")
    r = cfg.train_recipe();
  else if (split == "val")
    r = cfg.val_recipe();
  else
    r = cfg.test_recipe(std::isnan(snr) ? cfg.test_snr : snr);
  if (count > 0) r.count = count;
  const Dataset d = make_dataset(r);
  write_dataset(out_path, d, cfg.hash());
  out << "wrote " << out_path << ": " << d.samples.size() << " " << split << " samples, grid "
      << d.rows << "x" << d.cols << ", seed " << r.master_seed << ", config "
      << hex64(cfg.hash()) << "\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& out_path, const std::string& data_path,
              const std::string& val_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = common.resolve();
  print_advisories(cfg, err);
  const Dataset tr = dataset_for(cfg, cfg.train_recipe(), data_path, err);
  const Dataset va = dataset_for(cfg, cfg.val_recipe(), val_path, err);
  Model model = build_xlcnet(cfg.net(), cfg.seed);
  TrainOptions opt = cfg.train_options();
  opt.log = &out;
  const TrainSummary s = run_training(model, tr, va, opt);
  save_checkpoint(out_path, model, cfg.seed, cfg.hash());
  print_train_summary(out, s);
  out << "saved " << out_path << "\n";
  return 0;
}

int cmd_prune(const Common& common, const std::string& model_path, const std::string& out_path,
              double kappa_flag, std::ostream& out, std::ostream&) {
  ExperimentConfig cfg = common.resolve();
  Checkpoint ck = load_checkpoint(model_path);
  const double kappa = kappa_flag > 0 ? kappa_flag : cfg.prune_ratio;
  const float threshold = compute_threshold(ck.model, kappa);
  const PruneMask mask = prune(ck.model, kappa);
  save_checkpoint(out_path, ck.model, ck.seed, ck.config_hash);
  out << "pruned " << model_path << " at kappa " << fmt("%g", kappa) << " (threshold "
      << fmt("%.6g", static_cast<double>(threshold)) << "): zeroed " << (mask.total - mask.retained)
      << " of " << mask.total << " kernel weights, retained " << mask.retained << "\n";
  out << "saved " << out_path << "\n";
  return 0;
}

int cmd_finetune(const Common& common, const std::string& model_path, const std::string& out_path,
                 int epochs_flag, const std::string& data_path, const std::string& val_path,
                 std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = common.resolve();
  print_advisories(cfg, err);
  Checkpoint ck = load_checkpoint(model_path);
  hash_note(ck.config_hash, cfg, model_path, err);
  const PruneMask mask = mask_from_nonzero(ck.model);
  if (mask.retained == mask.total)
    err << "note: " << model_path << " has no zeroed weights; fine-tuning updates everything\n";
  const Dataset tr = dataset_for(cfg, cfg.train_recipe(), data_path, err);
  const Dataset va = dataset_for(cfg, cfg.val_recipe(), val_path, err);
  TrainOptions opt = cfg.train_options();
  opt.log = &out;
  opt.epochs = epochs_flag > 0 ? epochs_flag : cfg.finetune_epochs;
  const auto t0 = std::chrono::steady_clock::now();
  TrainSummary s;
  s.result = fine_tune(ck.model, mask, tr, va, opt.epochs, opt);
  s.minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  save_checkpoint(out_path, ck.model, ck.seed, ck.config_hash);
  print_train_summary(out, s);
  out << "saved " << out_path << "\n";
  return 0;
}

int cmd_quantize(const Common& common, const std::string& model_path, const std::string& out_path,
                 int bits_flag, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = common.resolve();
  Checkpoint ck = load_checkpoint(model_path);
  hash_note(ck.config_hash, cfg, model_path, err);
  const int bits = bits_flag > 0 ? bits_flag : cfg.quant_bits;
  const PruneMask mask = mask_from_nonzero(ck.model);
  const double kappa =
      1.0 - static_cast<double>(mask.retained) / static_cast<double>(mask.total);
  const QuantizedModel q = quantize_model(ck.model, mask, bits, kappa);
  save_quantized(out_path, q, ck.seed, ck.config_hash);
  out << "quantized " << model_path << " to " << bits << "-bit codes: retained " << mask.retained
      << " of " << mask.total << " kernel weights (kappa " << fmt("%.4g", kappa)
      << "), nominal ratio " << fmt("%.4g", compression_ratio(kappa, bits)) << "\n";
  out << "saved " << out_path << " (" << quantized_file_bytes(q) << " bytes vs "
      << model_file_bytes(ck.model) << " full-precision)\n";
  return 0;
}

int cmd_eval(const Common& common, const std::string& estimators_flag, const std::string& snr_flag,
             const std::string& model_path, const std::string& quantized_path,
             const std::string& csv_path, std::ostream& out, std::ostream& err) {
  std::vector<std::string> extra;
  if (!snr_flag.empty()) extra.push_back("snr_sweep=" + snr_flag);
  ExperimentConfig cfg = common.resolve(extra);
  print_advisories(cfg, err);

  const std::vector<std::string> estimators = split_list(estimators_flag);
  if (estimators.empty()) throw std::invalid_argument("eval: no estimators requested");

  Model model;
  const Model* model_ptr = nullptr;
  QuantizedModel quantized;
  const QuantizedModel* quantized_ptr = nullptr;
  for (const auto& e : estimators) {
    if (e == "xlcnet" && !model_ptr) {
      if (model_path.empty())
        throw std::invalid_argument("eval: estimator 'xlcnet' needs --model <checkpoint>");
      Checkpoint ck = load_checkpoint(model_path);
      hash_note(ck.config_hash, cfg, model_path, err);
      model = std::move(ck.model);
      model_ptr = &model;
    } else if (e == "cxlcnet" && !quantized_ptr) {
      if (quantized_path.empty())
        throw std::invalid_argument("eval: estimator 'cxlcnet' needs --quantized <checkpoint>");
      QuantizedCheckpoint qk = load_quantized(quantized_path);
      hash_note(qk.config_hash, cfg, quantized_path, err);
      quantized = std::move(qk.model);
      quantized_ptr = &quantized;
    }
  }

  const SweepResult r = run_snr_sweep(cfg, estimators, model_ptr, quantized_ptr);
  const std::string csv = sweep_csv(r);
  if (csv_path.empty()) {
    out << csv;
  } else {
    write_text(csv_path, csv);
    out << "wrote " << csv_path << " (" << r.rows.size() << " rows, config "
        << hex64(cfg.hash()) << ")\n";
  }
  return 0;
}

void print_model_report(std::ostream& out, const std::string& label, const Model& m) {
  const int antennas = m.rows * m.cols;
  const uint64_t nw = count_params(m, ParamConvention::kernels);
  const uint64_t trainable = count_params(m, ParamConvention::trainable);
  const uint64_t full = count_params(m, ParamConvention::with_running_stats);
  const uint64_t retained = count_retained_kernels(m);
  out << "model: " << label << "\n";
  out << "  layers: " << m.layers.size() << " conv, kernel " << m.layers.front().ksize() << "x"
      << m.layers.front().ksize() << ", grid " << m.rows << "x" << m.cols << " (M = " << antennas
      << ")\n";
  out << "  kernel weights: " << nw << "\n";
  out << "  trainable parameters: " << trainable << "\n";
  out << "  parameters incl. running stats: " << full << "\n";
  out << "  retained kernel weights: " << retained << " ("
      << fmt("%.2f", 100.0 * static_cast<double>(retained) / static_cast<double>(nw)) << "%)\n";
  out << "  retained incl. exempt parameters: " << retained + (full - nw) << "\n";
  out << "  MACs per sample (dense): " << flops_dense(m, antennas) << "\n";
  out << "  MACs per sample (retained): " << flops_retained(m, antennas) << "\n";
  out << "  checkpoint bytes: " << model_file_bytes(m) << "\n";
}

int cmd_report(const Common& common, const std::string& model_path,
               const std::string& quantized_path, int bench_reps, int bench_batch,
               std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = common.resolve();
  out << "config: " << hex64(cfg.hash()) << ", seed " << cfg.seed << "\n";

  Model model;
  bool have_model = false;
  if (!model_path.empty()) {
    Checkpoint ck = load_checkpoint(model_path);
    hash_note(ck.config_hash, cfg, model_path, err);
    model = std::move(ck.model);
    have_model = true;
    print_model_report(out, model_path, model);
  } else if (quantized_path.empty()) {
    model = build_xlcnet(cfg.net(), cfg.seed);
    have_model = true;
    print_model_report(out, "(fresh from config, untrained)", model);
  }

  if (!quantized_path.empty()) {
    QuantizedCheckpoint qk = load_quantized(quantized_path);
    hash_note(qk.config_hash, cfg, quantized_path, err);
    const QuantizedModel& q = qk.model;
    const uint64_t nw = count_params(q.skeleton, ParamConvention::kernels);
    const uint64_t full = count_params(q.skeleton, ParamConvention::with_running_stats);
    uint64_t retained = 0;
    for (const auto& l : q.layers) retained += l.retained;
    out << "quantized: " << quantized_path << "\n";
    out << "  code width: " << q.bits << " bits\n";
    out << "  declared prune ratio: " << fmt("%.4g", q.kappa) << "\n";
    out << "  retained kernel weights: " << retained << " of " << nw << " ("
        << fmt("%.2f", 100.0 * static_cast<double>(retained) / static_cast<double>(nw))
        << "%)\n";
    out << "  retained incl. exempt parameters: " << retained + (full - nw) << "\n";
    out << "  compression ratio (nominal 32/(b(1-kappa))): "
        << fmt("%.4g", compression_ratio(q.kappa, q.bits)) << "\n";
    out << "  compression ratio (effective): "
        << fmt("%.4g", effective_ratio(full, retained + (full - nw), q.bits)) << "\n";
    out << "  checkpoint bytes: " << quantized_file_bytes(q) << "\n";
    if (!have_model && bench_reps > 0) {
      model = dequantize_model(q);
      have_model = true;
    }
  }

  if (bench_reps > 0 && have_model) {
    const RuntimeStats rs = benchmark_runtime(model, bench_batch, bench_reps);
    out << "runtime: median " << fmt("%.4g", rs.median_ms) << " ms/sample (p10 "
        << fmt("%.4g", rs.p10_ms) << ", p90 " << fmt("%.4g", rs.p90_ms) << ") over "
        << rs.repetitions << " reps, batch " << rs.batch << "\n";
    out << "  MACs dense " << rs.macs_dense << ", retained " << rs.macs_retained << "\n";
    out << "  machine: " << rs.machine << "\n";
  }
  return 0;
}

int cmd_gradcheck(uint64_t seed, size_t stride, double tol, std::ostream& out, std::ostream&) {
  NetConfig cfg;
  cfg.layers = 3;
  cfg.hidden = 8;
  cfg.ksize = 3;
  cfg.rows = 6;
  cfg.cols = 6;
  ModelT<double> m = build_denoiser<double>(cfg, seed);

  // Move every parameter off its init point (the last layer starts all-zero,
  // biases zero, gamma one) so the check exercises generic positions.
  Pcg32 rng = make_stream(seed, stream_domain::init, 1000);
  for (auto& w : m.layers.back().kernels.v) w = 0.05 * rng.normal();
  for (auto& layer : m.layers) {
    for (auto& b : layer.bias) b = 0.01 * rng.normal();
    if (layer.batch_norm) {
      for (auto& g : layer.bn.gamma) g = 1.0 + 0.1 * rng.normal();
      for (auto& b : layer.bn.beta) b = 0.01 * rng.normal();
    }
  }

  // Denoiser-like probe: the target sits near the input, keeping the loss
  // O(1) so central differences stay well-conditioned.
  Tensor4<double> in(3, cfg.io_channels, cfg.rows, cfg.cols);
  Tensor4<double> target(3, cfg.io_channels, cfg.rows, cfg.cols);
  for (auto& x : in.v) x = rng.normal();
  for (size_t i = 0; i < target.v.size(); ++i) target.v[i] = in.v[i] + 0.1 * rng.normal();

  ForwardCache<double> cache;
  Tensor4<double> pred = model_forward(m, in, BnMode::train, &cache);
  auto [loss0, dpred] = mse_loss(pred, target);
  ModelGrads<double> grads;
  model_backward(m, cache, dpred, grads);

  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> analytic;
  double shadowed_bias = 0.0;  // largest analytic |dbias| under batch norm
  for (size_t l = 0; l < m.layers.size(); ++l) {
    params.emplace_back(m.layers[l].kernels.v);
    analytic.emplace_back(grads.conv[l].dkernels.v);
    if (m.layers[l].batch_norm) {
      // A conv bias feeding batch norm is redundant: the batch-mean
      // subtraction cancels any per-channel shift, so its true gradient is
      // identically zero. Central differences cannot resolve an exact zero
      // from roundoff, so require the analytic gradient to vanish instead.
      for (double g : grads.conv[l].dbias) shadowed_bias = std::max(shadowed_bias, std::abs(g));
      params.emplace_back(m.layers[l].bn.gamma);
      analytic.emplace_back(grads.bn[l].dgamma);
      params.emplace_back(m.layers[l].bn.beta);
      analytic.emplace_back(grads.bn[l].dbeta);
    } else {
      params.emplace_back(m.layers[l].bias);
      analytic.emplace_back(grads.conv[l].dbias);
    }
  }

  auto loss = [&] { return mse_loss(model_forward(m, in, BnMode::train), target).first; };
  // Floor 1e-4: gradients smaller than that are below what central
  // differences can resolve against roundoff at this loss scale, so they are
  // held to an absolute bound instead of a relative one.
  const GradCheckReport rep = finite_diff_check(loss, params, analytic, 1e-5, stride, 1e-4);
  out << "gradcheck: loss " << fmt("%.6g", loss0) << ", checked " << rep.checked
      << " coordinates (stride " << stride << "), max rel err " << fmt("%.3g", rep.max_rel_err)
      << ", max abs err " << fmt("%.3g", rep.max_abs_err) << ", BN-shadowed bias grads <= "
      << fmt("%.3g", shadowed_bias) << "\n";
  const bool ok = rep.pass(tol) && shadowed_bias <= 1e-9;
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << fmt("%.3g", tol) << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

std::string sweep_csv(const SweepResult& r) {
  std::string csv = "estimator,snr_db,nmse,nmse_db,samples,seed\n";
  for (const auto& row : r.rows) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s,%g,%.9g,%.9g,%d,%llu\n", row.estimator.c_str(), row.snr_db,
                  row.nmse, nmse_db(row.nmse), row.samples,
                  static_cast<unsigned long long>(row.seed));
    csv += buf;
  }
  return csv;
}

SweepResult run_snr_sweep(const ExperimentConfig& cfg, const std::vector<std::string>& estimators,
                          const Model* model, const QuantizedModel* quantized) {
  if (estimators.empty()) throw std::invalid_argument("no estimators requested");
  bool need_lmmse = false;
  for (const auto& e : estimators) {
    if (e == "ls" || e == "lmmse" || e == "xlcnet" || e == "cxlcnet") {
      need_lmmse |= (e == "lmmse");
    } else {
      throw std::invalid_argument("unknown estimator '" + e +
                                  "' (choose from ls, lmmse, xlcnet, cxlcnet)");
    }
  }
  for (const auto& e : estimators) {
    if (e == "xlcnet" && !model)
      throw std::invalid_argument("estimator 'xlcnet' needs a loaded model");
    if (e == "cxlcnet" && !quantized)
      throw std::invalid_argument("estimator 'cxlcnet' needs a loaded quantized model");
  }

  Eigen::MatrixXcd cov;
  if (need_lmmse) cov = covariance_from_spec(cfg.test_channel(), cfg.lmmse_samples, cfg.seed);
  Model dequantized;
  if (quantized) dequantized = dequantize_model(*quantized);

  SweepResult out;
  for (const double snr : cfg.sweep_points()) {
    const Dataset test = make_dataset(cfg.test_recipe(snr));
    for (const auto& e : estimators) {
      EvalStats st;
      if (e == "ls")
        st = evaluate_ls(test);
      else if (e == "lmmse")
        st = evaluate_lmmse(test, cov, snr);
      else if (e == "xlcnet")
        st = evaluate_model(*model, test);
      else
        st = evaluate_model(dequantized, test);
      out.rows.push_back(
          {e, snr, st.aggregate_nmse, static_cast<int>(test.samples.size()), cfg.seed});
    }
  }
  return out;
}

RuntimeStats benchmark_runtime(const Model& m, int batch, int repetitions) {
  if (batch < 1) throw std::invalid_argument("benchmark_runtime: batch must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("benchmark_runtime: repetitions must be >= 1");
  Tensor4f in(batch, m.io_channels(), m.rows, m.cols);
  Pcg32 rng = make_stream(0xB000, stream_domain::test, 0);
  for (auto& x : in.v) x = static_cast<float>(rng.normal());

  for (int i = 0; i < 2; ++i) (void)model_forward(m, in, BnMode::infer);  // warm-up

  volatile float sink = 0.0f;
  std::vector<double> ms(static_cast<size_t>(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor4f out = model_forward(m, in, BnMode::infer);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + out.v[0];
    ms[static_cast<size_t>(i)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count() / batch;
  }
  std::sort(ms.begin(), ms.end());
  auto quantile = [&](double q) {
    const size_t idx = static_cast<size_t>(std::llround(q * static_cast<double>(ms.size() - 1)));
    return ms[idx];
  };
  RuntimeStats rs;
  rs.batch = batch;
  rs.repetitions = repetitions;
  rs.median_ms = ms.size() % 2 ? ms[ms.size() / 2]
                               : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
  rs.p10_ms = quantile(0.10);
  rs.p90_ms = quantile(0.90);
  rs.macs_dense = flops_dense(m, m.rows * m.cols);
  rs.macs_retained = flops_retained(m, m.rows * m.cols);
  rs.machine = cpu_descriptor() + std::string(" | ") +
               kernels::backend_name(kernels::best_backend()) + " kernels";
  return rs;
}

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"XL-MIMO channel-estimation toolkit: simulate, estimate, denoise, compress"};
  app.name("xlc");
  app.require_subcommand(1);

  Common gen_c, train_c, prune_c, tune_c, quant_c, eval_c, report_c;

  auto* gen = app.add_subcommand("generate", "Generate a channel dataset (XLCD)");
  gen_c.attach(gen);
  std::string gen_out, gen_split = "train";
  int gen_count = 0;
  double gen_snr = std::numeric_limits<double>::quiet_NaN();
  gen->add_option("--out", gen_out, "output .xlcd path")->required();
  gen->add_option("--split", gen_split, "which recipe to draw from")
      ->check(CLI::IsMember({"train", "val", "test"}));
  gen->add_option("--count", gen_count, "sample count override");
  gen->add_option("--snr", gen_snr, "SNR dB for the test split (default: test_snr)");

  auto* tr = app.add_subcommand("train", "Train the denoiser and save an XLCM checkpoint");
  train_c.attach(tr);
  std::string train_out, train_data, train_val;
  tr->add_option("--out", train_out, "output .xlcm path")->required();
  tr->add_option("--data", train_data, "training dataset (.xlcd; default: generate from config)");
  tr->add_option("--val", train_val, "validation dataset (.xlcd; default: generate from config)");

  auto* pr = app.add_subcommand("prune", "Zero the smallest-magnitude kernel weights");
  prune_c.attach(pr);
  std::string prune_model, prune_out;
  double prune_kappa = 0.0;
  pr->add_option("--model", prune_model, "input .xlcm checkpoint")->required();
  pr->add_option("--out", prune_out, "output .xlcm path")->required();
  pr->add_option("--kappa", prune_kappa, "pruning ratio override (default: prune_ratio)");

  auto* ft = app.add_subcommand("finetune", "Retrain a pruned model with its zeros frozen");
  tune_c.attach(ft);
  std::string tune_model, tune_out, tune_data, tune_val;
  int tune_epochs = 0;
  ft->add_option("--model", tune_model, "input .xlcm checkpoint")->required();
  ft->add_option("--out", tune_out, "output .xlcm path")->required();
  ft->add_option("--epochs", tune_epochs, "epoch override (default: finetune_epochs)");
  ft->add_option("--data", tune_data, "training dataset (.xlcd)");
  ft->add_option("--val", tune_val, "validation dataset (.xlcd)");

  auto* qu = app.add_subcommand("quantize", "Quantize retained weights to b-bit codes (XLCQ)");
  quant_c.attach(qu);
  std::string quant_model, quant_out;
  int quant_bits = 0;
  qu->add_option("--model", quant_model, "input .xlcm checkpoint")->required();
  qu->add_option("--out", quant_out, "output .xlcq path")->required();
  qu->add_option("--bits", quant_bits, "code width override (default: quant_bits)");

  auto* ev = app.add_subcommand("eval", "NMSE sweep over estimators; emits CSV");
  eval_c.attach(ev);
  std::string eval_estimators = "ls,lmmse", eval_snr, eval_model, eval_quantized, eval_csv;
  ev->add_option("--estimators", eval_estimators, "comma list: ls,lmmse,xlcnet,cxlcnet");
  ev->add_option("--snr", eval_snr, "sweep override, start:stop:step or one value");
  ev->add_option("--model", eval_model, ".xlcm checkpoint for xlcnet");
  ev->add_option("--quantized", eval_quantized, ".xlcq checkpoint for cxlcnet");
  ev->add_option("--out", eval_csv, "CSV output path (default: stdout)");

  auto* rp = app.add_subcommand("report", "Parameter/FLOP/size/runtime report");
  report_c.attach(rp);
  std::string report_model, report_quantized;
  int report_bench = 0, report_batch = 8;
  rp->add_option("--model", report_model, ".xlcm checkpoint (default: fresh from config)");
  rp->add_option("--quantized", report_quantized, ".xlcq checkpoint");
  rp->add_option("--benchmark", report_bench, "time inference over N repetitions");
  rp->add_option("--batch", report_batch, "benchmark batch size");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the training gradients");
  uint64_t gc_seed = 7;
  size_t gc_stride = 17;
  double gc_tol = 1e-5;
  gc->add_option("--seed", gc_seed, "probe model/data seed");
  gc->add_option("--stride", gc_stride, "check every stride-th coordinate");
  gc->add_option("--tol", gc_tol, "max allowed relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_c, gen_out, gen_split, gen_count, gen_snr, out, err);
    if (tr->parsed()) return cmd_train(train_c, train_out, train_data, train_val, out, err);
    if (pr->parsed()) return cmd_prune(prune_c, prune_model, prune_out, prune_kappa, out, err);
    if (ft->parsed())
      return cmd_finetune(tune_c, tune_model, tune_out, tune_epochs, tune_data, tune_val, out,
                          err);
    if (qu->parsed()) return cmd_quantize(quant_c, quant_model, quant_out, quant_bits, out, err);
    if (ev->parsed())
      return cmd_eval(eval_c, eval_estimators, eval_snr, eval_model, eval_quantized, eval_csv,
                      out, err);
    if (rp->parsed())
      return cmd_report(report_c, report_model, report_quantized, report_bench, report_batch, out,
                        err);
    if (gc->parsed()) return cmd_gradcheck(gc_seed, gc_stride, gc_tol, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand\n";  // unreachable with require_subcommand(1)
  return 1;
}

}  // namespace xlc
