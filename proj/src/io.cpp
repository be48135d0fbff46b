#include "xlc/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace xlc {

namespace {

std::string at_byte(uint64_t off) { return " (byte " + std::to_string(off) + ")"; }

constexpr uint32_t kMaxChannels = 4096;
constexpr uint32_t kMaxKernel = 63;
constexpr uint32_t kMaxGridDim = 65536;

// Little-endian primitives over a tracked stream offset. Bulk f32 arrays hit
// a single memcpy-backed call on little-endian hosts.
class Writer {
 public:
  Writer(const std::string& path) : path_(path), f_(path, std::ios::binary | std::ios::trunc) {
    if (!f_) throw IoError(path_, 0, "cannot open for writing");
  }

  void bytes(const void* p, size_t n) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!f_) throw IoError(path_, off_, "write failed");
    off_ += n;
  }
  void u16(uint16_t x) {
    uint8_t b[2] = {uint8_t(x), uint8_t(x >> 8)};
    bytes(b, 2);
  }
  void u32(uint32_t x) {
    uint8_t b[4] = {uint8_t(x), uint8_t(x >> 8), uint8_t(x >> 16), uint8_t(x >> 24)};
    bytes(b, 4);
  }
  void u64(uint64_t x) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = uint8_t(x >> (8 * i));
    bytes(b, 8);
  }
  void i32(int32_t x) { u32(static_cast<uint32_t>(x)); }
  void f32(float x) { u32(std::bit_cast<uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<uint64_t>(x)); }
  void f32s(const float* p, size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(p, n * sizeof(float));
    } else {
      for (size_t i = 0; i < n; ++i) f32(p[i]);
    }
  }
  void close() {
    f_.close();
    if (!f_) throw IoError(path_, off_, "close failed");
  }
  uint64_t offset() const { return off_; }

 private:
  std::string path_;
  std::ofstream f_;
  uint64_t off_ = 0;
};

class Reader {
 public:
  Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw IoError(path_, 0, "cannot open for reading");
    f_.seekg(0, std::ios::end);
    size_ = static_cast<uint64_t>(f_.tellg());
    f_.seekg(0, std::ios::beg);
  }

  void bytes(void* p, size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(f_.gcount()) != n)
      throw IoError(path_, off_ + static_cast<uint64_t>(f_.gcount()), "unexpected end of file");
    off_ += n;
  }
  uint16_t u16() {
    uint8_t b[2];
    bytes(b, 2);
    return static_cast<uint16_t>(b[0] | (uint16_t(b[1]) << 8));
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    return b[0] | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
  }
  uint64_t u64() {
    uint8_t b[8];
    bytes(b, 8);
    uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= uint64_t(b[i]) << (8 * i);
    return x;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void f32s(float* p, size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(p, n * sizeof(float));
    } else {
      for (size_t i = 0; i < n; ++i) p[i] = f32();
    }
  }
  void expect_magic(const char tag[4]) {
    char b[4];
    bytes(b, 4);
    if (std::memcmp(b, tag, 4) != 0)
      throw IoError(path_, off_ - 4, std::string("bad magic, expected \"") + tag + "\"");
  }
  [[noreturn]] void fail(const std::string& msg, uint64_t back = 0) {
    throw IoError(path_, off_ - back, msg);
  }
  void expect_eof() {
    if (off_ != size_)
      fail(std::to_string(size_ - off_) + " trailing bytes after the last record");
  }
  uint64_t remaining() const { return size_ - off_; }
  uint64_t offset() const { return off_; }

 private:
  std::string path_;
  std::ifstream f_;
  uint64_t size_ = 0;
  uint64_t off_ = 0;
};

uint32_t layer_flags(const ConvLayer<float>& l) {
  return (l.relu ? 1u : 0u) | (l.batch_norm ? 2u : 0u);
}

void write_layer_shape(Writer& w, const ConvLayer<float>& l, uint32_t extra_flags = 0) {
  w.u32(static_cast<uint32_t>(l.out_channels()));
  w.u32(static_cast<uint32_t>(l.in_channels()));
  w.u32(static_cast<uint32_t>(l.ksize()));
  w.u32(layer_flags(l) | extra_flags);
}

struct LayerShape {
  uint32_t out, in, f, flags;
};

LayerShape read_layer_shape(Reader& r) {
  LayerShape s{r.u32(), r.u32(), r.u32(), r.u32()};
  if (s.out == 0 || s.out > kMaxChannels || s.in == 0 || s.in > kMaxChannels)
    r.fail("layer channel count out of range", 16);
  if (s.f == 0 || s.f > kMaxKernel || s.f % 2 == 0)
    r.fail("kernel size must be odd and in [1, 63]", 8);
  return s;
}

ConvLayer<float> make_layer(const LayerShape& s) {
  ConvLayer<float> l;
  l.kernels = Tensor4f(static_cast<int>(s.out), static_cast<int>(s.in), static_cast<int>(s.f),
                       static_cast<int>(s.f));
  l.bias.assign(s.out, 0.0f);
  l.relu = (s.flags & 1u) != 0;
  l.batch_norm = (s.flags & 2u) != 0;
  if (l.batch_norm) l.bn.init(static_cast<int>(s.out));
  return l;
}

void write_bn(Writer& w, const BnParams<float>& bn) {
  const size_t c = bn.gamma.size();
  w.f32s(bn.gamma.data(), c);
  w.f32s(bn.beta.data(), c);
  w.f32s(bn.running_mean.data(), c);
  w.f32s(bn.running_var.data(), c);
}

void read_bn(Reader& r, BnParams<float>& bn) {
  const size_t c = bn.gamma.size();
  r.f32s(bn.gamma.data(), c);
  r.f32s(bn.beta.data(), c);
  r.f32s(bn.running_mean.data(), c);
  r.f32s(bn.running_var.data(), c);
}

// Shared 32-byte header for XLCM/XLCQ checkpoints.
void write_model_header(Writer& w, const char magic[4], const Model& m, uint64_t seed,
                        uint64_t config_hash) {
  w.bytes(magic, 4);
  w.u16(kFormatVersion);
  w.u16(static_cast<uint16_t>(m.layers.size()));
  w.u32(static_cast<uint32_t>(m.rows));
  w.u32(static_cast<uint32_t>(m.cols));
  w.u64(seed);
  w.u64(config_hash);
}

struct ModelHeader {
  uint16_t layer_count;
  uint32_t rows, cols;
  uint64_t seed, config_hash;
};

ModelHeader read_model_header(Reader& r, const char magic[4]) {
  r.expect_magic(magic);
  const uint16_t version = r.u16();
  if (version != kFormatVersion)
    r.fail("unsupported format version " + std::to_string(version), 2);
  ModelHeader h;
  h.layer_count = r.u16();
  h.rows = r.u32();
  h.cols = r.u32();
  if (h.layer_count == 0) r.fail("layer count must be >= 1", 10);
  if (h.rows == 0 || h.rows > kMaxGridDim || h.cols == 0 || h.cols > kMaxGridDim)
    r.fail("grid dimensions out of range", 8);
  h.seed = r.u64();
  h.config_hash = r.u64();
  return h;
}

void check_chain(Reader& r, const std::vector<ConvLayer<float>>& layers) {
  for (size_t l = 1; l < layers.size(); ++l)
    if (layers[l].in_channels() != layers[l - 1].out_channels())
      r.fail("layer " + std::to_string(l) + " input channels do not match layer " +
             std::to_string(l - 1) + " output channels");
}

}  // namespace

IoError::IoError(const std::string& path, uint64_t offset, const std::string& msg)
    : std::runtime_error(path + ": " + msg + at_byte(offset)), path_(path), offset_(offset) {}

uint64_t dataset_file_bytes(int rows, int cols, uint64_t count) {
  const uint64_t grid = static_cast<uint64_t>(rows) * cols * 2 * sizeof(float);
  return 32 + count * (sizeof(float) + 2 * grid);
}

void write_dataset(const std::string& path, const Dataset& d, uint64_t config_hash) {
  if (d.rows <= 0 || d.cols <= 0) throw std::invalid_argument("write_dataset: empty grid dims");
  if (d.antennas != d.rows * d.cols)
    throw std::invalid_argument("write_dataset: antennas != rows*cols");
  const size_t per = static_cast<size_t>(d.rows) * d.cols * 2;
  for (const Sample& s : d.samples)
    if (s.ls.v.size() != per || s.truth.v.size() != per)
      throw std::invalid_argument("write_dataset: sample grid does not match dataset dims");

  Writer w(path);
  w.bytes("XLCD", 4);
  w.u16(kFormatVersion);
  w.u32(static_cast<uint32_t>(d.antennas));
  w.u32(static_cast<uint32_t>(d.rows));
  w.u32(static_cast<uint32_t>(d.cols));
  w.u64(d.samples.size());
  w.u32(static_cast<uint32_t>(d.seed));  // reserved: provenance hints only
  w.u16(static_cast<uint16_t>(config_hash ^ (config_hash >> 16) ^ (config_hash >> 32) ^
                              (config_hash >> 48)));
  for (const Sample& s : d.samples) {
    w.f32(s.snr_db);
    w.f32s(s.ls.v.data(), per);
    w.f32s(s.truth.v.data(), per);
  }
  w.close();
}

Dataset read_dataset(const std::string& path) {
  Reader r(path);
  r.expect_magic("XLCD");
  const uint16_t version = r.u16();
  if (version != kFormatVersion)
    r.fail("unsupported format version " + std::to_string(version), 2);
  const uint32_t m = r.u32();
  const uint32_t d1 = r.u32();
  const uint32_t d2 = r.u32();
  if (d1 == 0 || d1 > kMaxGridDim || d2 == 0 || d2 > kMaxGridDim)
    r.fail("grid dimensions out of range", 8);
  if (static_cast<uint64_t>(d1) * d2 != m) r.fail("M != D1*D2 in header", 12);
  const uint64_t count = r.u64();
  const uint32_t seed = r.u32();
  r.u16();  // config-hash fold: provenance only

  const uint64_t per_sample = sizeof(float) * (1 + 2ull * d1 * d2 * 2);
  if (r.remaining() != count * per_sample)
    r.fail("payload is " + std::to_string(r.remaining()) + " bytes, header promises " +
           std::to_string(count * per_sample));

  Dataset d;
  d.antennas = static_cast<int>(m);
  d.rows = static_cast<int>(d1);
  d.cols = static_cast<int>(d2);
  d.seed = seed;
  d.samples.resize(count);
  const size_t per = static_cast<size_t>(d1) * d2 * 2;
  for (Sample& s : d.samples) {
    s.snr_db = r.f32();
    s.ls = Grid32(static_cast<int>(d1), static_cast<int>(d2));
    s.truth = Grid32(static_cast<int>(d1), static_cast<int>(d2));
    r.f32s(s.ls.v.data(), per);
    r.f32s(s.truth.v.data(), per);
  }
  r.expect_eof();
  return d;
}

uint64_t model_file_bytes(const Model& m) {
  uint64_t n = 32;
  for (const auto& l : m.layers) {
    n += 16;  // shape + flags
    n += (l.kernels.size() + l.bias.size()) * sizeof(float);
    if (l.batch_norm) n += 4ull * l.bn.gamma.size() * sizeof(float);
  }
  return n;
}

void save_checkpoint(const std::string& path, const Model& m, uint64_t seed,
                     uint64_t config_hash) {
  if (m.layers.empty()) throw std::invalid_argument("save_checkpoint: model has no layers");
  Writer w(path);
  write_model_header(w, "XLCM", m, seed, config_hash);
  for (const auto& l : m.layers) {
    write_layer_shape(w, l);
    w.f32s(l.kernels.data(), l.kernels.size());
    w.f32s(l.bias.data(), l.bias.size());
    if (l.batch_norm) write_bn(w, l.bn);
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  const ModelHeader h = read_model_header(r, "XLCM");
  Checkpoint c;
  c.seed = h.seed;
  c.config_hash = h.config_hash;
  c.model.rows = static_cast<int>(h.rows);
  c.model.cols = static_cast<int>(h.cols);
  c.model.layers.reserve(h.layer_count);
  for (uint16_t i = 0; i < h.layer_count; ++i) {
    ConvLayer<float> l = make_layer(read_layer_shape(r));
    r.f32s(l.kernels.data(), l.kernels.size());
    r.f32s(l.bias.data(), l.bias.size());
    if (l.batch_norm) read_bn(r, l.bn);
    c.model.layers.push_back(std::move(l));
  }
  check_chain(r, c.model.layers);
  r.expect_eof();
  return c;
}

uint64_t quantized_file_bytes(const QuantizedModel& q) {
  uint64_t n = 32 + 12;  // header + kappa + global bits
  for (size_t i = 0; i < q.layers.size(); ++i) {
    const auto& sk = q.skeleton.layers[i];
    const auto& ql = q.layers[i];
    n += 16 + 24;  // shape/flags + bits,S,Z,constant,retained
    n += ql.keep.size() + ql.codes.size();
    n += sk.bias.size() * sizeof(float);
    if (sk.batch_norm) n += 4ull * sk.bn.gamma.size() * sizeof(float);
  }
  return n;
}

void save_quantized(const std::string& path, const QuantizedModel& q, uint64_t seed,
                    uint64_t config_hash) {
  if (q.skeleton.layers.empty())
    throw std::invalid_argument("save_quantized: model has no layers");
  if (q.layers.size() != q.skeleton.layers.size())
    throw std::invalid_argument("save_quantized: layer payload/skeleton mismatch");
  Writer w(path);
  write_model_header(w, "XLCQ", q.skeleton, seed, config_hash);
  w.f64(q.kappa);
  w.u32(static_cast<uint32_t>(q.bits));
  for (size_t i = 0; i < q.layers.size(); ++i) {
    const auto& sk = q.skeleton.layers[i];
    const auto& ql = q.layers[i];
    const size_t nw = sk.kernels.size();
    if (ql.keep.size() != (nw + 7) / 8)
      throw std::invalid_argument("save_quantized: bitmap does not match layer " +
                                  std::to_string(i));
    if (ql.zero_point < std::numeric_limits<int32_t>::min() ||
        ql.zero_point > std::numeric_limits<int32_t>::max())
      throw std::invalid_argument("save_quantized: zero point of layer " + std::to_string(i) +
                                  " does not fit a signed 32-bit field");
    write_layer_shape(w, sk, ql.degenerate ? 4u : 0u);
    w.u32(ql.bits);
    w.f32(ql.scale);
    w.i32(static_cast<int32_t>(ql.zero_point));
    w.f32(ql.constant);
    w.u64(ql.retained);
    w.bytes(ql.keep.data(), ql.keep.size());
    w.bytes(ql.codes.data(), ql.codes.size());
    w.f32s(sk.bias.data(), sk.bias.size());
    if (sk.batch_norm) write_bn(w, sk.bn);
  }
  w.close();
}

QuantizedCheckpoint load_quantized(const std::string& path) {
  Reader r(path);
  const ModelHeader h = read_model_header(r, "XLCQ");
  QuantizedCheckpoint c;
  c.seed = h.seed;
  c.config_hash = h.config_hash;
  c.model.kappa = r.f64();
  c.model.bits = static_cast<int>(r.u32());
  c.model.skeleton.rows = static_cast<int>(h.rows);
  c.model.skeleton.cols = static_cast<int>(h.cols);
  for (uint16_t i = 0; i < h.layer_count; ++i) {
    const LayerShape shape = read_layer_shape(r);
    ConvLayer<float> sk = make_layer(shape);
    QuantizedLayer ql;
    ql.degenerate = (shape.flags & 4u) != 0;
    ql.bits = r.u32();
    if (ql.bits < 1 || ql.bits > 32) r.fail("code width must be in [1, 32]", 4);
    ql.scale = r.f32();
    ql.zero_point = r.i32();
    ql.constant = r.f32();
    ql.retained = r.u64();
    const size_t nw = sk.kernels.size();
    if (ql.retained > nw) r.fail("retained count exceeds layer weight count", 8);
    ql.keep.resize((nw + 7) / 8);
    r.bytes(ql.keep.data(), ql.keep.size());
    uint64_t pop = 0;
    for (uint8_t b : ql.keep) pop += std::popcount(b);
    if (pop != ql.retained)
      r.fail("retention bitmap population (" + std::to_string(pop) +
             ") disagrees with retained count (" + std::to_string(ql.retained) + ")");
    if (!ql.degenerate) {
      ql.codes.resize((ql.retained * ql.bits + 7) / 8);
      r.bytes(ql.codes.data(), ql.codes.size());
    }
    r.f32s(sk.bias.data(), sk.bias.size());
    if (sk.batch_norm) read_bn(r, sk.bn);
    c.model.skeleton.layers.push_back(std::move(sk));
    c.model.layers.push_back(std::move(ql));
  }
  check_chain(r, c.model.skeleton.layers);
  r.expect_eof();
  return c;
}

}  // namespace xlc
