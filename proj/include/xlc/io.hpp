// Binary artifact formats: XLCD datasets, XLCM model checkpoints, and XLCQ
// quantized checkpoints. All integers and IEEE-754 values are little-endian;
// round trips are bit-exact. Malformed input is rejected with an IoError
// naming the file and the byte offset of the problem.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "xlc/compress.hpp"
#include "xlc/dataset.hpp"
#include "xlc/model.hpp"

namespace xlc {

inline constexpr uint16_t kFormatVersion = 1;

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, uint64_t offset, const std::string& msg);
  const std::string& path() const { return path_; }
  uint64_t offset() const { return offset_; }

 private:
  std::string path_;
  uint64_t offset_;
};

// --- XLCD datasets ---------------------------------------------------------
// 32-byte header: magic "XLCD", version u16, M u32, D1 u32, D2 u32,
// count u64, 6 reserved bytes (we stamp the low 32 bits of the master seed
// and a 16-bit fold of the config hash; readers ignore them).
// Per sample: SNR dB f32 (+inf = noiseless), LS grid, truth grid; each grid
// D1*D2*2 f32, row-major, real channel first.
void write_dataset(const std::string& path, const Dataset& d, uint64_t config_hash = 0);
Dataset read_dataset(const std::string& path);

// Exact on-disk size of a dataset file (header + count samples).
uint64_t dataset_file_bytes(int rows, int cols, uint64_t count);

// --- XLCM model checkpoints ------------------------------------------------
// 32-byte header: magic "XLCM", version u16, layer count u16, rows u32,
// cols u32, seed u64, config hash u64. Per layer: out/in/f/flags u32 (flag
// bit0 = relu, bit1 = batch norm), kernels (out*in*f*f f32, storage order),
// bias (out f32), then gamma/beta/running mean/running var (out f32 each)
// when the layer carries batch norm.
struct Checkpoint {
  Model model;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
};

void save_checkpoint(const std::string& path, const Model& m, uint64_t seed = 0,
                     uint64_t config_hash = 0);
Checkpoint load_checkpoint(const std::string& path);

uint64_t model_file_bytes(const Model& m);

// --- XLCQ quantized checkpoints ---------------------------------------------
// Same 32-byte header with magic "XLCQ", then kappa f64 and the global code
// width u32. Per layer: out/in/f/flags u32 (bit2 = degenerate), bits u32,
// S f32, Z i32, degenerate constant f32, retained count u64, retention
// bitmap (ceil(Nw/8) bytes, LSB-first), packed codes (absent when
// degenerate), bias, and BN arrays as in XLCM. Z outside 32-bit range is a
// save-time error (reachable only at extreme code widths).
struct QuantizedCheckpoint {
  QuantizedModel model;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
};

void save_quantized(const std::string& path, const QuantizedModel& q, uint64_t seed = 0,
                    uint64_t config_hash = 0);
QuantizedCheckpoint load_quantized(const std::string& path);

uint64_t quantized_file_bytes(const QuantizedModel& q);

}  // namespace xlc
