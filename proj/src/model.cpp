#include "xlc/model.hpp"

#include <cstring>

namespace xlc {

// Grid storage (re/im interleaved per pixel) is exactly one NHWC sample with
// C = 2, so batch assembly is a straight copy per sample.
Tensor4f grids_to_batch(const std::vector<const Grid32*>& grids, int rows, int cols) {
  if (grids.empty()) throw std::invalid_argument("grids_to_batch: empty batch");
  Tensor4f out(static_cast<int>(grids.size()), 2, rows, cols);
  const size_t per = static_cast<size_t>(rows) * cols * 2;
  for (size_t s = 0; s < grids.size(); ++s) {
    const Grid32* g = grids[s];
    if (g->rows != rows || g->cols != cols)
      throw std::invalid_argument("grids_to_batch: grid dims mismatch");
    std::memcpy(out.data() + s * per, g->v.data(), per * sizeof(float));
  }
  return out;
}

Grid32 batch_to_grid(const Tensor4f& batch, int sample) {
  if (batch.c != 2) throw std::invalid_argument("batch_to_grid: expected 2 channels");
  if (sample < 0 || sample >= batch.n) throw std::invalid_argument("batch_to_grid: bad index");
  Grid32 g(batch.h, batch.w);
  const size_t per = static_cast<size_t>(batch.h) * batch.w * 2;
  std::memcpy(g.v.data(), batch.data() + static_cast<size_t>(sample) * per, per * sizeof(float));
  return g;
}

Grid32 forward_grid(const Model& m, const Grid32& ls, kernels::Backend b) {
  const Grid32* one[] = {&ls};
  Tensor4f in = grids_to_batch({one[0]}, m.rows, m.cols);
  Tensor4f out = model_forward(m, in, BnMode::infer, nullptr, b);
  return batch_to_grid(out, 0);
}

}  // namespace xlc
