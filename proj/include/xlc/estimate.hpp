// Pilot observation model and the two classical estimators.
//
// One pilot symbol with transmit power P: y = sqrt(P) h + z, z ~ CN(0, n0 I).
// LS divides the noise back in; LMMSE additionally shrinks toward the channel
// covariance. Grids are the real/imaginary-split 2-D views the denoiser
// consumes.

#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xlc/channel.hpp"
#include "xlc/rng.hpp"

namespace xlc {

struct Observation {
  Cvec y;                  // received pilot, length M
  double power = 1.0;      // transmit power P
  double noise_power = 1.0;  // n0 (variance per complex entry)
};

// Draw z and form y = sqrt(P) h + z. noise_power 0 means a noiseless probe.
Observation observe(const Cvec& h, double power, double noise_power, Pcg32& rng);

// h_ls = y / sqrt(P).
Cvec ls_estimate(const Observation& obs);

// R = (1/N) sum_n h_n h_n^H, accumulated in blocks so N can be large.
class CovarianceAccumulator {
public:
  explicit CovarianceAccumulator(int m);
  void add(const Cvec& h);
  Eigen::MatrixXcd finish();  // flushes; callable once per accumulation
  uint64_t count() const { return count_; }

private:
  void flush();
  Eigen::MatrixXcd sum_;
  Eigen::MatrixXcd block_;
  int pending_ = 0;
  uint64_t count_ = 0;
};

Eigen::MatrixXcd empirical_covariance(const std::vector<Cvec>& channels);

// W = R (R + (n0 / P) I)^-1, applied as h_lmmse = W h_ls. Factorizing once
// and reusing across an SNR point is much cheaper than solving per sample.
class LmmseFilter {
public:
  LmmseFilter(const Eigen::MatrixXcd& covariance, double power, double noise_power);
  Cvec apply(const Cvec& h_ls) const;
  const Eigen::MatrixXcd& matrix() const { return w_; }

private:
  Eigen::MatrixXcd w_;
};

Cvec lmmse_estimate(const Observation& obs, const Eigen::MatrixXcd& covariance);

// 2-D real/imag-split view of a length-M complex vector: channel 0 holds the
// real part, channel 1 the imaginary part, row-major over (rows, cols).
// Storage keeps the two parts of one entry adjacent: v[(i*cols + j)*2 + c].
template <typename T>
struct GridT {
  int rows = 0, cols = 0;
  std::vector<T> v;

  GridT() = default;
  GridT(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c * 2, T(0)) {}

  T& re(int i, int j) { return v[(static_cast<size_t>(i) * cols + j) * 2]; }
  T& im(int i, int j) { return v[(static_cast<size_t>(i) * cols + j) * 2 + 1]; }
  const T& re(int i, int j) const { return v[(static_cast<size_t>(i) * cols + j) * 2]; }
  const T& im(int i, int j) const { return v[(static_cast<size_t>(i) * cols + j) * 2 + 1]; }
};

using Grid = GridT<double>;
using Grid32 = GridT<float>;

// Row-major reshape: vector index m maps to (m / cols, m % cols). Exact
// inverse of grid_to_vector.
Grid reshape_to_grid(const Cvec& h, int rows, int cols);
Cvec grid_to_vector(const Grid& g);
Grid32 grid_to_f32(const Grid& g);

// Most-square factorization rows x cols with rows <= cols. Throws for primes
// and suggests padding in the message.
std::pair<int, int> default_grid_dims(int m);

// sum |err|^2 / sum |truth|^2 over all 2*rows*cols entries.
template <typename A, typename B>
double nmse(const GridT<A>& truth, const GridT<B>& estimate);

double nmse_db(double nmse_linear);

// SNR convention used throughout: n0 = 1, P = 10^(snr_db / 10).
double snr_to_power(double snr_db);

}  // namespace xlc
