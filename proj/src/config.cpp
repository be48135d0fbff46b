#include "xlc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace xlc {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& v) {
  int64_t x = 0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc{} || p != e) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return x;
}

uint64_t parse_uint(const std::string& v) {
  uint64_t x = 0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc{} || p != e)
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return x;
}

double parse_real(const std::string& v) {
  double x = 0;
  const char* b = v.data();
  const char* e = b + v.size();
  bool neg = false;
  if (b != e && (*b == '+' || *b == '-')) {  // from_chars takes no leading '+'
    neg = (*b == '-');
    ++b;
  }
  auto [p, ec] = std::from_chars(b, e, x);
  if (ec != std::errc{} || p != e) throw std::invalid_argument("expected a number, got '" + v + "'");
  return neg ? -x : x;
}

int parse_int32(const std::string& v) {
  const int64_t x = parse_int(v);
  if (x < INT32_MIN || x > INT32_MAX) throw std::invalid_argument("integer out of range: '" + v + "'");
  return static_cast<int>(x);
}

std::string fmt_real(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_int(int64_t x) { return std::to_string(x); }

struct KeyDesc {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

// std::map keeps canonical_text sorted by key for free.
const std::map<std::string, KeyDesc>& key_table() {
  static const std::map<std::string, KeyDesc> table = [] {
    std::map<std::string, KeyDesc> t;
    auto add_int = [&t](const char* name, int ExperimentConfig::* f) {
      t[name] = {[f](const ExperimentConfig& c) { return fmt_int(c.*f); },
                 [f](ExperimentConfig& c, const std::string& v) { c.*f = parse_int32(v); }};
    };
    auto add_real = [&t](const char* name, double ExperimentConfig::* f) {
      t[name] = {[f](const ExperimentConfig& c) { return fmt_real(c.*f); },
                 [f](ExperimentConfig& c, const std::string& v) { c.*f = parse_real(v); }};
    };
    auto add_str = [&t](const char* name, std::string ExperimentConfig::* f) {
      t[name] = {[f](const ExperimentConfig& c) { return c.*f; },
                 [f](ExperimentConfig& c, const std::string& v) { c.*f = v; }};
    };
    t["seed"] = {[](const ExperimentConfig& c) { return std::to_string(c.seed); },
                 [](ExperimentConfig& c, const std::string& v) { c.seed = parse_uint(v); }};
    add_int("antennas", &ExperimentConfig::antennas);
    add_real("wavelength", &ExperimentConfig::wavelength);
    add_real("spacing", &ExperimentConfig::spacing);
    add_int("paths", &ExperimentConfig::paths);
    add_int("far_paths", &ExperimentConfig::far_paths);
    add_real("power_gain", &ExperimentConfig::power_gain);
    add_real("distance_min", &ExperimentConfig::distance_min);
    add_real("distance_max", &ExperimentConfig::distance_max);
    add_int("grid_rows", &ExperimentConfig::grid_rows);
    add_int("grid_cols", &ExperimentConfig::grid_cols);
    add_int("layers", &ExperimentConfig::layers);
    add_int("hidden_channels", &ExperimentConfig::hidden_channels);
    add_int("kernel_size", &ExperimentConfig::kernel_size);
    add_int("epochs", &ExperimentConfig::epochs);
    add_int("batch_size", &ExperimentConfig::batch_size);
    add_real("learning_rate", &ExperimentConfig::learning_rate);
    add_int("train_samples", &ExperimentConfig::train_samples);
    add_int("val_samples", &ExperimentConfig::val_samples);
    add_real("train_snr_min", &ExperimentConfig::train_snr_min);
    add_real("train_snr_max", &ExperimentConfig::train_snr_max);
    add_real("prune_ratio", &ExperimentConfig::prune_ratio);
    add_int("finetune_epochs", &ExperimentConfig::finetune_epochs);
    add_int("quant_bits", &ExperimentConfig::quant_bits);
    add_int("test_samples", &ExperimentConfig::test_samples);
    add_real("test_snr", &ExperimentConfig::test_snr);
    add_str("snr_sweep", &ExperimentConfig::snr_sweep);
    add_str("test_field", &ExperimentConfig::test_field);
    add_int("test_paths", &ExperimentConfig::test_paths);
    add_int("lmmse_samples", &ExperimentConfig::lmmse_samples);
    return t;
  }();
  return table;
}

[[noreturn]] void bad(const std::string& name, int line, const std::string& msg) {
  throw std::invalid_argument(name + ": line " + std::to_string(line) + ": " + msg);
}

[[noreturn]] void sweep_fail(const std::string& sweep, const std::string& msg) {
  throw std::invalid_argument("config: snr_sweep '" + sweep + "': " + msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (antennas < 1) fail("antennas must be >= 1");
  if (!(wavelength > 0)) fail("wavelength must be positive");
  if (!(spacing > 0) && spacing != -1.0) fail("spacing must be positive or -1 (half wavelength)");
  if (paths < 1) fail("paths must be >= 1");
  if (far_paths < 0 || far_paths > paths) fail("far_paths must lie in [0, paths]");
  if (!(power_gain > 0)) fail("power_gain must be positive");
  if (!(distance_min > 0) || !(distance_max >= distance_min))
    fail("need 0 < distance_min <= distance_max");
  if ((grid_rows == 0) != (grid_cols == 0)) fail("set both grid_rows and grid_cols, or neither");
  if (grid_rows < 0 || grid_cols < 0) fail("grid dims cannot be negative");
  if (grid_rows > 0 && grid_rows * grid_cols != antennas)
    fail("grid_rows * grid_cols must equal antennas");
  if (layers < 2) fail("layers must be >= 2");
  if (hidden_channels < 1) fail("hidden_channels must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel_size must be odd and >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 2) fail("batch_size must be >= 2 (batch norm)");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    fail("learning_rate must be positive and finite");
  if (train_samples < 1 || val_samples < 1 || test_samples < 1)
    fail("sample counts must be >= 1");
  if (std::isnan(train_snr_min) || std::isnan(train_snr_max) || train_snr_min > train_snr_max)
    fail("need train_snr_min <= train_snr_max");
  if (std::isnan(test_snr)) fail("test_snr must not be NaN");
  if (!(prune_ratio > 0.0) || !(prune_ratio < 1.0)) fail("prune_ratio must lie in (0, 1)");
  if (finetune_epochs < 1) fail("finetune_epochs must be >= 1");
  if (quant_bits < 1 || quant_bits > 32) fail("quant_bits must lie in [1, 32]");
  if (test_field != "near" && test_field != "far" && test_field != "hybrid")
    fail("test_field must be near, far, or hybrid");
  if (test_paths < 1) fail("test_paths must be >= 1");
  if (lmmse_samples < 1) fail("lmmse_samples must be >= 1");
  (void)sweep_points();  // throws on a malformed sweep
  (void)grid_dims();     // throws when the antenna count has no usable split
  channel().validate();
  test_channel().validate();
  net().validate();
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [name, desc] : key_table()) {
    out += name;
    out += " = ";
    out += desc.get(*this);
    out += "\n";
  }
  return out;
}

uint64_t ExperimentConfig::hash() const {
  uint64_t h = 14695981039346656037ull;  // FNV-1a 64
  for (const unsigned char ch : canonical_text()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ArrayGeometry ExperimentConfig::geometry() const {
  ArrayGeometry g;
  g.antennas = antennas;
  g.wavelength = wavelength;
  g.spacing = (spacing == -1.0) ? wavelength / 2.0 : spacing;
  return g;
}

std::pair<int, int> ExperimentConfig::grid_dims() const {
  if (grid_rows > 0) return {grid_rows, grid_cols};
  return default_grid_dims(antennas);
}

HybridChannelSpec ExperimentConfig::channel() const {
  HybridChannelSpec s;
  s.geometry = geometry();
  s.total_paths = paths;
  s.far_paths = far_paths;
  s.power_gain = power_gain;
  s.distance_min = distance_min;
  s.distance_max = distance_max;
  return s;
}

HybridChannelSpec ExperimentConfig::test_channel() const {
  HybridChannelSpec s = channel();
  s.total_paths = test_paths;
  if (test_field == "near") {
    s.far_paths = 0;
  } else if (test_field == "far") {
    s.far_paths = test_paths;
  } else {  // hybrid: keep the training far-path count where possible
    s.far_paths = std::min(far_paths, test_paths);
  }
  return s;
}

NetConfig ExperimentConfig::net() const {
  NetConfig n;
  n.layers = layers;
  n.hidden = hidden_channels;
  n.ksize = kernel_size;
  const auto [r, c] = grid_dims();
  n.rows = r;
  n.cols = c;
  return n;
}

DatasetRecipe ExperimentConfig::train_recipe() const {
  DatasetRecipe r;
  r.channel = channel();
  r.count = train_samples;
  r.snr_min = train_snr_min;
  r.snr_max = train_snr_max;
  const auto [gr, gc] = grid_dims();
  r.rows = gr;
  r.cols = gc;
  r.master_seed = seed;
  r.domain = stream_domain::train;
  return r;
}

DatasetRecipe ExperimentConfig::val_recipe() const {
  DatasetRecipe r = train_recipe();
  r.count = val_samples;
  r.domain = stream_domain::val;
  return r;
}

DatasetRecipe ExperimentConfig::test_recipe(double snr_db) const {
  DatasetRecipe r;
  r.channel = test_channel();
  r.count = test_samples;
  r.snr_min = r.snr_max = snr_db;
  const auto [gr, gc] = grid_dims();
  r.rows = gr;
  r.cols = gc;
  r.master_seed = seed;
  r.domain = stream_domain::test;
  return r;
}

TrainOptions ExperimentConfig::train_options() const {
  TrainOptions o;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.lr = learning_rate;
  o.seed = seed;
  return o;
}

std::vector<double> ExperimentConfig::sweep_points() const {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : snr_sweep) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  try {
    if (parts.size() == 1) return {parse_real(trim(parts[0]))};
    if (parts.size() != 3) sweep_fail(snr_sweep, "expected 'value' or 'start:stop:step'");
    const double start = parse_real(trim(parts[0]));
    const double stop = parse_real(trim(parts[1]));
    const double step = parse_real(trim(parts[2]));
    if (!(step > 0)) sweep_fail(snr_sweep, "step must be positive");
    if (stop < start) sweep_fail(snr_sweep, "stop must be >= start");
    std::vector<double> pts;
    for (int i = 0;; ++i) {
      const double v = start + i * step;
      if (v > stop + 1e-9) break;
      pts.push_back(v);
    }
    return pts;
  } catch (const std::invalid_argument& e) {
    // Re-tag number-format errors with the sweep context (idempotent for
    // errors sweep_fail itself raised).
    const std::string what = e.what();
    if (what.rfind("config: snr_sweep", 0) == 0) throw;
    sweep_fail(snr_sweep, what);
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
  ExperimentConfig c;
  std::map<std::string, int> seen;  // key -> first line
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash_pos = raw.find('#');
    if (hash_pos != std::string::npos) raw.erase(hash_pos);
    const std::string body = trim(raw);
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    if (eq == std::string::npos) bad(name, line, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) bad(name, line, "missing key before '='");
    const auto it = key_table().find(key);
    if (it == key_table().end()) bad(name, line, "unknown key '" + key + "'");
    if (const auto prev = seen.find(key); prev != seen.end())
      bad(name, line,
          "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    seen.emplace(key, line);
    try {
      it->second.set(c, value);
    } catch (const std::invalid_argument& e) {
      bad(name, line, std::string("bad value for '") + key + "': " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument(path + ": cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + assignment + "': expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto it = key_table().find(key);
  if (it == key_table().end())
    throw std::invalid_argument("override '" + assignment + "': unknown key '" + key + "'");
  try {
    it->second.set(c, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("override '" + assignment + "': " + e.what());
  }
}

std::string default_config_text() { return ExperimentConfig{}.canonical_text(); }

std::vector<std::string> spec_advisories(const HybridChannelSpec& spec) {
  std::vector<std::string> notes;
  const int half = spec.total_paths / 2;
  if (spec.far_paths > 0 && spec.far_paths < spec.total_paths &&
      (spec.far_paths < 1 || spec.far_paths > half))
    notes.push_back("hybrid channel: far-path count " + std::to_string(spec.far_paths) +
                    " lies outside the 1.." + std::to_string(half) +
                    " modeling guideline for L=" + std::to_string(spec.total_paths));
  return notes;
}

}  // namespace xlc
